#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vgdf/core/rng.hpp"
#include "vgdf/core/tabular_mdp.hpp"

namespace vgdf::theory {

// Stochastic policy over a finite MDP, row-major probs[s][a].
struct TabularPolicy {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;

  TabularPolicy() = default;
  TabularPolicy(std::size_t states, std::size_t actions)
      : n_states(states), n_actions(actions), probs(states * actions, 1.0 / static_cast<double>(actions)) {}

  double& operator()(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }
  double operator()(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }

  static TabularPolicy uniform(std::size_t states, std::size_t actions) { return TabularPolicy(states, actions); }

  static TabularPolicy random(std::size_t states, std::size_t actions, SeededRng& rng, double concentration = 1.0) {
    TabularPolicy pi(states, actions);
    for (std::size_t s = 0; s < states; ++s) {
      auto row = random_simplex(actions, rng, concentration);
      for (std::size_t a = 0; a < actions; ++a) pi(s, a) = row[a];
    }
    return pi;
  }
};

inline void check_policy(const TabularPolicy& pi, const TabularMdp& m) {
  if (pi.n_states != m.n_states || pi.n_actions != m.n_actions || pi.probs.size() != m.n_states * m.n_actions)
    throw std::invalid_argument("policy shape does not match MDP");
  for (std::size_t s = 0; s < pi.n_states; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < pi.n_actions; ++a) {
      if (pi(s, a) < 0.0) throw std::invalid_argument("policy has a negative probability");
      total += pi(s, a);
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "policy row " << s << " sums to " << total;
      throw std::invalid_argument(msg.str());
    }
  }
}

// V in discounted-return units (sum of gamma^t r); eta normalized by (1-gamma).
struct ValueTriple {
  Eigen::VectorXd V;
  Eigen::MatrixXd Q;  // [s][a]
  double eta = 0.0;
  double bellman_residual = 0.0;
};

struct OccupancyMeasure {
  Eigen::VectorXd state;         // nu[s]
  Eigen::MatrixXd state_action;  // rho[s][a]
};

class SolverResidualError : public std::runtime_error {
 public:
  explicit SolverResidualError(double residual)
      : std::runtime_error("linear solve residual " + std::to_string(residual) + " exceeds tolerance"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

namespace detail {

inline Eigen::MatrixXd policy_transition(const TabularMdp& m, const TabularPolicy& pi) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double w = pi(s, a);
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < m.n_states; ++t) P(s, t) += w * m.p(s, a, t);
    }
  return P;
}

inline Eigen::VectorXd policy_reward(const TabularMdp& m, const TabularPolicy& pi) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) r(s) += pi(s, a) * m.r(s, a);
  return r;
}

inline Eigen::VectorXd start(const TabularMdp& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.initial_dist.data(), static_cast<Eigen::Index>(m.n_states));
}

// (P V)[s][a] = sum_s' P(s'|s,a) V(s').
inline Eigen::MatrixXd expect_next(const TabularMdp& m, const Eigen::VectorXd& V) {
  Eigen::MatrixXd out(m.n_states, m.n_actions);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double acc = 0.0;
      for (std::size_t t = 0; t < m.n_states; ++t) acc += m.p(s, a, t) * V(t);
      out(s, a) = acc;
    }
  return out;
}

inline Eigen::VectorXd policy_average(const TabularPolicy& pi, const Eigen::MatrixXd& Q) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(Q.rows());
  for (Eigen::Index s = 0; s < Q.rows(); ++s)
    for (Eigen::Index a = 0; a < Q.cols(); ++a) v(s) += pi(s, a) * Q(s, a);
  return v;
}

}  // namespace detail

// Policy evaluation by a direct LU solve of V = r_pi + gamma P_pi V.
inline ValueTriple exact_values(const TabularMdp& m, const TabularPolicy& pi, double tol = 1e-10) {
  check_policy(pi, m);
  const auto n = static_cast<Eigen::Index>(m.n_states);
  Eigen::MatrixXd P = detail::policy_transition(m, pi);
  Eigen::VectorXd r = detail::policy_reward(m, pi);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - m.discount * P;
  ValueTriple out;
  out.V = A.partialPivLu().solve(r);
  out.bellman_residual = (r + m.discount * P * out.V - out.V).cwiseAbs().maxCoeff();
  if (out.bellman_residual > tol) throw SolverResidualError(out.bellman_residual);
  Eigen::MatrixXd R(m.n_states, m.n_actions);
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) R(s, a) = m.r(s, a);
  out.Q = R + m.discount * detail::expect_next(m, out.V);
  out.eta = (1.0 - m.discount) * detail::start(m).dot(out.V);
  return out;
}

// Normalized discounted visitation: nu = (1-gamma) rho0 + gamma P_pi^T nu.
inline OccupancyMeasure occupancy(const TabularMdp& m, const TabularPolicy& pi, double tol = 1e-10) {
  check_policy(pi, m);
  const auto n = static_cast<Eigen::Index>(m.n_states);
  Eigen::MatrixXd P = detail::policy_transition(m, pi);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - m.discount * P.transpose();
  Eigen::VectorXd b = (1.0 - m.discount) * detail::start(m);
  OccupancyMeasure occ;
  occ.state = A.partialPivLu().solve(b);
  double residual = (A * occ.state - b).cwiseAbs().maxCoeff();
  if (residual > tol) throw SolverResidualError(residual);
  occ.state_action.resize(n, static_cast<Eigen::Index>(m.n_actions));
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) occ.state_action(s, a) = occ.state(s) * pi(s, a);
  return occ;
}

// Iterative policy evaluation; cross-check for exact_values.
inline Eigen::VectorXd iterate_values(const TabularMdp& m, const TabularPolicy& pi, double tol = 1e-12,
                                      std::size_t max_iter = 1'000'000) {
  std::vector<double> v(m.n_states, 0.0), next(m.n_states, 0.0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    double delta = 0.0;
    for (std::size_t s = 0; s < m.n_states; ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < m.n_actions; ++a) {
        double q = m.r(s, a);
        for (std::size_t t = 0; t < m.n_states; ++t) q += m.discount * m.p(s, a, t) * v[t];
        acc += pi(s, a) * q;
      }
      next[s] = acc;
      delta = std::max(delta, std::abs(acc - v[s]));
    }
    v.swap(next);
    if (delta < tol) break;
  }
  Eigen::VectorXd out(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) out(s) = v[s];
  return out;
}

// Optimal state values by value iteration.
inline Eigen::VectorXd optimal_values(const TabularMdp& m, double tol = 1e-12, std::size_t max_iter = 1'000'000) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_states);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd q = detail::expect_next(m, v);
    Eigen::VectorXd next(m.n_states);
    for (std::size_t s = 0; s < m.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m.n_actions; ++a) best = std::max(best, m.r(s, a) + m.discount * q(s, a));
      next(s) = best;
    }
    double delta = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (delta < tol) break;
  }
  return v;
}

inline double total_variation(const double* p, const double* q, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

// D_TV(P1(.|s,a) || P2(.|s,a)) for every (s,a).
inline Eigen::MatrixXd dynamics_tv(const TabularMdp& m1, const TabularMdp& m2) {
  Eigen::MatrixXd out(m1.n_states, m1.n_actions);
  for (std::size_t s = 0; s < m1.n_states; ++s)
    for (std::size_t a = 0; a < m1.n_actions; ++a)
      out(s, a) = total_variation(&m1.transition[(s * m1.n_actions + a) * m1.n_states],
                                  &m2.transition[(s * m2.n_actions + a) * m2.n_states], m1.n_states);
  return out;
}

// D_TV(pi1(.|s) || pi2(.|s)) per state.
inline Eigen::VectorXd policy_tv(const TabularPolicy& p1, const TabularPolicy& p2) {
  Eigen::VectorXd out(p1.n_states);
  for (std::size_t s = 0; s < p1.n_states; ++s)
    out(s) = total_variation(&p1.probs[s * p1.n_actions], &p2.probs[s * p2.n_actions], p1.n_actions);
  return out;
}

}  // namespace vgdf::theory
