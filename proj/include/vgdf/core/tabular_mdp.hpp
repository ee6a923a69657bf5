#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/core/rng.hpp"

namespace vgdf {

// Explicit finite MDP: P[s][a][s'], R[s][a], discount, start distribution.
struct TabularMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> transition;  // row-major [s][a][s']
  std::vector<double> reward;      // row-major [s][a]
  double discount = 0.9;
  std::vector<double> initial_dist;
  double r_max = 1.0;

  TabularMdp() = default;
  TabularMdp(std::size_t states, std::size_t actions, double gamma, double rmax = 1.0)
      : n_states(states),
        n_actions(actions),
        transition(states * actions * states, 0.0),
        reward(states * actions, 0.0),
        discount(gamma),
        initial_dist(states, states ? 1.0 / static_cast<double>(states) : 0.0),
        r_max(rmax) {}

  double& p(std::size_t s, std::size_t a, std::size_t s_next) {
    return transition[(s * n_actions + a) * n_states + s_next];
  }
  double p(std::size_t s, std::size_t a, std::size_t s_next) const {
    return transition[(s * n_actions + a) * n_states + s_next];
  }
  double& r(std::size_t s, std::size_t a) { return reward[s * n_actions + a]; }
  double r(std::size_t s, std::size_t a) const { return reward[s * n_actions + a]; }

  bool same_spaces(const TabularMdp& other) const {
    return n_states == other.n_states && n_actions == other.n_actions;
  }
};

struct MdpViolation {
  std::string what;
};

struct MdpReport {
  std::vector<MdpViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) out += v.what + "\n";
    return out;
  }
};

inline MdpReport validate_mdp(const TabularMdp& m, double tol = 1e-12) {
  MdpReport report;
  auto add = [&](const std::string& msg) { report.violations.push_back({msg}); };
  if (m.transition.size() != m.n_states * m.n_actions * m.n_states) add("transition tensor has wrong size");
  if (m.reward.size() != m.n_states * m.n_actions) add("reward matrix has wrong size");
  if (m.initial_dist.size() != m.n_states) add("initial distribution has wrong size");
  if (!report.ok()) return report;
  if (!(m.discount >= 0.0 && m.discount < 1.0)) add("discount outside [0,1)");
  for (std::size_t s = 0; s < m.n_states; ++s) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      double sum = 0.0;
      bool negative = false;
      for (std::size_t t = 0; t < m.n_states; ++t) {
        double v = m.p(s, a, t);
        if (v < 0.0 || !std::isfinite(v)) negative = true;
        sum += v;
      }
      std::ostringstream where;
      where << "(s=" << s << ", a=" << a << ")";
      if (negative) add("negative or non-finite transition probability at " + where.str());
      if (std::abs(sum - 1.0) > tol) {
        std::ostringstream msg;
        msg << "transition row " << where.str() << " sums to " << sum;
        add(msg.str());
      }
      double rew = m.r(s, a);
      if (!std::isfinite(rew) || rew < 0.0 || rew > m.r_max + tol) {
        std::ostringstream msg;
        msg << "reward " << rew << " at " << where.str() << " outside [0, r_max=" << m.r_max << "]";
        add(msg.str());
      }
    }
  }
  double total = 0.0;
  for (double v : m.initial_dist) {
    if (v < 0.0) add("negative initial-state probability");
    total += v;
  }
  if (std::abs(total - 1.0) > tol) add("initial distribution does not sum to 1");
  return report;
}

// Dirichlet(concentration) draw of length n.
inline std::vector<double> random_simplex(std::size_t n, SeededRng& rng, double concentration = 1.0) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& v : out) {
    v = g(rng.engine());
    total += v;
  }
  if (total <= 0.0) {
    out.assign(n, 0.0);
    out[rng.index(n)] = 1.0;
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

inline void randomize_dynamics(TabularMdp& m, SeededRng& rng, double concentration = 1.0) {
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      auto row = random_simplex(m.n_states, rng, concentration);
      for (std::size_t t = 0; t < m.n_states; ++t) m.p(s, a, t) = row[t];
    }
}

// Random MDP with Dirichlet dynamics, uniform rewards in [0, r_max] and a
// Dirichlet start distribution.
inline TabularMdp random_mdp(std::size_t states, std::size_t actions, double gamma, SeededRng& rng,
                             double r_max = 1.0) {
  TabularMdp m(states, actions, gamma, r_max);
  randomize_dynamics(m, rng);
  for (auto& r : m.reward) r = rng.uniform(0.0, r_max);
  m.initial_dist = random_simplex(states, rng);
  return m;
}

// A second MDP with the same spaces, rewards, discount and start distribution
// but freshly drawn dynamics.
inline TabularMdp with_random_dynamics(const TabularMdp& base, SeededRng& rng) {
  TabularMdp m = base;
  randomize_dynamics(m, rng);
  return m;
}

}  // namespace vgdf
