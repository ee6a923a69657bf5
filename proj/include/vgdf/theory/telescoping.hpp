#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "vgdf/theory/bounds.hpp"

namespace vgdf::theory {

inline constexpr double kTelescopingTolerance = 1e-8;

// Exact evaluation of J1(pi1) - J2(pi2) against c * E_{rho^{pi1}_{M1}}[G],
// G(s,a) = E_{s'~P1, a'~pi1} Q2(s',a') - E_{s'~P2, a'~pi2} Q2(s',a'),
// with J = rho0^T V (discounted return, i.e. eta / (1-gamma)).
struct TelescopingReport {
  double performance_gap = 0.0;     // J1(pi1) - J2(pi2)
  double expected_gap_term = 0.0;   // E_rho[G]
  double residual_one_over = 0.0;   // |gap - E[G]/(1-gamma)|
  double residual_gamma_over = 0.0; // |gap - gamma E[G]/(1-gamma)|
  // Set when exactly one candidate constant reproduces the gap within tolerance.
  std::optional<double> constant;
  std::string constant_name = "none";
  // rho0^T sum_a (pi1 - pi2) Q2: the start-state policy mismatch.
  double initial_state_term = 0.0;
  // |gap - (gamma/(1-gamma) E[G] + initial_state_term)|
  double residual_with_initial_term = 0.0;

  double best_residual() const { return std::min(residual_one_over, residual_gamma_over); }
};

inline TelescopingReport check_telescoping(const TabularMdp& m1, const TabularMdp& m2, const TabularPolicy& pi1,
                                           const TabularPolicy& pi2) {
  detail::require_pair(m1, m2);
  const double g = m1.discount;
  ValueTriple v1 = exact_values(m1, pi1);
  ValueTriple v2 = exact_values(m2, pi2);
  OccupancyMeasure occ = occupancy(m1, pi1);
  Eigen::VectorXd rho0 = detail::start(m1);

  Eigen::VectorXd v2_under_pi1 = detail::policy_average(pi1, v2.Q);
  Eigen::MatrixXd G = detail::expect_next(m1, v2_under_pi1) - detail::expect_next(m2, v2.V);

  TelescopingReport rep;
  rep.performance_gap = rho0.dot(v1.V) - rho0.dot(v2.V);
  rep.expected_gap_term = detail::weighted_sum(occ.state_action, G);
  const double c_one = 1.0 / (1.0 - g);
  const double c_gamma = g / (1.0 - g);
  rep.residual_one_over = std::abs(rep.performance_gap - c_one * rep.expected_gap_term);
  rep.residual_gamma_over = std::abs(rep.performance_gap - c_gamma * rep.expected_gap_term);
  bool one_ok = rep.residual_one_over <= kTelescopingTolerance;
  bool gamma_ok = rep.residual_gamma_over <= kTelescopingTolerance;
  if (one_ok != gamma_ok) {
    rep.constant = one_ok ? c_one : c_gamma;
    rep.constant_name = one_ok ? "1/(1-gamma)" : "gamma/(1-gamma)";
  } else if (one_ok && gamma_ok) {
    // Only possible when E[G] ~ 0; both constants fit.
    rep.constant_name = "either";
  }
  rep.initial_state_term = rho0.dot(v2_under_pi1 - v2.V);
  rep.residual_with_initial_term =
      std::abs(rep.performance_gap - (c_gamma * rep.expected_gap_term + rep.initial_state_term));
  return rep;
}

// Same-policy form: G(s,a) = E_{P1} V2 - E_{P2} V2.
inline TelescopingReport check_telescoping(const TabularMdp& m1, const TabularMdp& m2, const TabularPolicy& pi) {
  return check_telescoping(m1, m2, pi, pi);
}

// Pointwise bound on G(s,a):
// G <= 2 r_max/(1-gamma) E_{s'~P1}[TV(pi1||pi2)] + |E_{P1,pi2} Q2 - E_{P2,pi2} Q2|.
struct GapBoundReport {
  double max_violation = -std::numeric_limits<double>::infinity();  // max over (s,a) of G - bound
  std::size_t pairs_checked = 0;
  bool holds() const { return max_violation <= kBoundTolerance; }
};

inline GapBoundReport check_gap_bound(const TabularMdp& m1, const TabularMdp& m2, const TabularPolicy& pi1,
                                      const TabularPolicy& pi2) {
  detail::require_pair(m1, m2);
  const double g = m1.discount;
  ValueTriple v2 = exact_values(m2, pi2);
  Eigen::VectorXd v2_under_pi1 = detail::policy_average(pi1, v2.Q);
  Eigen::MatrixXd G = detail::expect_next(m1, v2_under_pi1) - detail::expect_next(m2, v2.V);
  Eigen::MatrixXd tv_term = detail::expect_next(m1, policy_tv(pi1, pi2)) * (2.0 * m1.r_max / (1.0 - g));
  Eigen::MatrixXd value_term = (detail::expect_next(m1, v2.V) - detail::expect_next(m2, v2.V)).cwiseAbs();
  GapBoundReport rep;
  for (Eigen::Index s = 0; s < G.rows(); ++s)
    for (Eigen::Index a = 0; a < G.cols(); ++a) {
      rep.max_violation = std::max(rep.max_violation, G(s, a) - (tv_term(s, a) + value_term(s, a)));
      ++rep.pairs_checked;
    }
  return rep;
}

}  // namespace vgdf::theory
