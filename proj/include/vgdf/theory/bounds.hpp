#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vgdf/core/transition.hpp"
#include "vgdf/theory/evaluation.hpp"

namespace vgdf::theory {

// lhs >= rhs - kBoundTolerance counts as satisfied.
inline constexpr double kBoundTolerance = 1e-9;

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  std::map<std::string, double> terms;
  bool satisfied = false;
  double slack = 0.0;
  std::vector<std::size_t> flagged_states;

  void finalize() {
    slack = lhs - rhs;
    satisfied = lhs >= rhs - kBoundTolerance;
  }
};

namespace detail {

inline void require_pair(const TabularMdp& src, const TabularMdp& tar) {
  if (!src.same_spaces(tar)) throw std::invalid_argument("source and target MDPs have different state/action spaces");
  if (src.discount != tar.discount) throw std::invalid_argument("source and target MDPs have different discounts");
  if (src.reward != tar.reward) throw std::invalid_argument("source and target MDPs have different rewards");
  if (src.initial_dist != tar.initial_dist)
    throw std::invalid_argument("source and target MDPs have different start distributions");
}

inline double weighted_sum(const Eigen::MatrixXd& rho, const Eigen::MatrixXd& f) { return (rho.array() * f.array()).sum(); }

}  // namespace detail

// eta_tar(pi) >= eta_src(pi) - 2 gamma r_max / (1-gamma)^2 * E_{rho_src}[TV(P_src||P_tar)].
inline BoundReport check_dynamics_bound(const TabularMdp& src, const TabularMdp& tar, const TabularPolicy& pi) {
  detail::require_pair(src, tar);
  const double g = src.discount;
  ValueTriple vs = exact_values(src, pi);
  ValueTriple vt = exact_values(tar, pi);
  OccupancyMeasure occ = occupancy(src, pi);
  double tv = detail::weighted_sum(occ.state_action, dynamics_tv(src, tar));
  double coef = 2.0 * g * src.r_max / ((1.0 - g) * (1.0 - g));
  BoundReport rep;
  rep.name = "dynamics";
  rep.lhs = vt.eta;
  rep.rhs = vs.eta - coef * tv;
  rep.terms = {{"eta_src", vs.eta}, {"eta_tar", vt.eta}, {"expected_tv", tv}, {"coefficient", coef}};
  rep.finalize();
  return rep;
}

// eta_tar(pi) >= eta_src(pi) - gamma/(1-gamma) * E_{rho_src}[|E_Psrc V_tar - E_Ptar V_tar|].
inline BoundReport check_value_bound(const TabularMdp& src, const TabularMdp& tar, const TabularPolicy& pi) {
  detail::require_pair(src, tar);
  const double g = src.discount;
  ValueTriple vs = exact_values(src, pi);
  ValueTriple vt = exact_values(tar, pi);
  OccupancyMeasure occ = occupancy(src, pi);
  Eigen::MatrixXd gap = (detail::expect_next(src, vt.V) - detail::expect_next(tar, vt.V)).cwiseAbs();
  double value_term = detail::weighted_sum(occ.state_action, gap);
  double tv = detail::weighted_sum(occ.state_action, dynamics_tv(src, tar));
  double implied = 2.0 * src.r_max / (1.0 - g) * tv;
  BoundReport rep;
  rep.name = "value";
  rep.lhs = vt.eta;
  rep.rhs = vs.eta - g / (1.0 - g) * value_term;
  rep.terms = {{"eta_src", vs.eta},
               {"eta_tar", vt.eta},
               {"value_difference", value_term},
               {"dynamics_implied", implied},
               {"value_not_looser", value_term <= implied + kBoundTolerance ? 1.0 : 0.0}};
  rep.finalize();
  return rep;
}

// pi_D(a|s) = N(s,a)/N(s) over a discrete dataset. States without data get
// the uniform distribution and are returned in `unseen`.
inline TabularPolicy empirical_policy(const std::vector<Transition>& dataset, std::size_t n_states,
                                      std::size_t n_actions, std::vector<std::size_t>* unseen = nullptr) {
  std::vector<double> counts(n_states * n_actions, 0.0);
  for (const auto& t : dataset) {
    if (t.kind != SpaceKind::Discrete) throw std::invalid_argument("empirical policy needs discrete transitions");
    std::size_t s = t.state_index(), a = t.action_index();
    if (s >= n_states || a >= n_actions) throw std::invalid_argument("dataset index out of range");
    counts[s * n_actions + a] += 1.0;
  }
  TabularPolicy pi(n_states, n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) total += counts[s * n_actions + a];
    if (total == 0.0) {
      if (unseen) unseen->push_back(s);
      continue;
    }
    for (std::size_t a = 0; a < n_actions; ++a) pi(s, a) = counts[s * n_actions + a] / total;
  }
  return pi;
}

// Offline-source bound with behavior policy pi_D:
// eta_tar(pi) >= eta_src(pi) - 4 r_max/(1-gamma)^2 E_{rho^{pi_D}_src, P_src}[TV(pi_D||pi)]
//                            - 1/(1-gamma) E_{rho^{pi_D}_src}[|zeta|].
inline BoundReport check_offline_bound(const TabularMdp& src, const TabularMdp& tar, const TabularPolicy& behavior,
                                       const TabularPolicy& pi) {
  detail::require_pair(src, tar);
  const double g = src.discount;
  ValueTriple vs = exact_values(src, pi);
  ValueTriple vt = exact_values(tar, pi);
  OccupancyMeasure occ_d = occupancy(src, behavior);
  // TV(pi_D(.|s') || pi(.|s')) averaged over s' ~ P_src(.|s,a).
  Eigen::VectorXd tv_state = policy_tv(behavior, pi);
  double reg = detail::weighted_sum(occ_d.state_action, detail::expect_next(src, tv_state));
  // zeta(s,a) = E_{P_src,pi} Q_tar - E_{P_tar,pi} Q_tar = (P_src - P_tar) V_tar.
  Eigen::MatrixXd zeta = detail::expect_next(src, vt.V) - detail::expect_next(tar, vt.V);
  double value_term = detail::weighted_sum(occ_d.state_action, zeta.cwiseAbs());
  double reg_coef = 4.0 * src.r_max / ((1.0 - g) * (1.0 - g));
  double value_coef = 1.0 / (1.0 - g);
  BoundReport rep;
  rep.name = "offline";
  rep.lhs = vt.eta;
  rep.rhs = vs.eta - reg_coef * reg - value_coef * value_term;
  double rhs_gamma_factor = vs.eta - reg_coef * reg - g / (1.0 - g) * value_term;
  rep.terms = {{"eta_src", vs.eta},
               {"eta_tar", vt.eta},
               {"policy_regularization", reg},
               {"value_difference", value_term},
               {"regularization_penalty", reg_coef * reg},
               {"value_penalty", value_coef * value_term},
               {"rhs_with_gamma_factor", rhs_gamma_factor},
               {"satisfied_only_with_gamma_factor",
                (vt.eta < rep.rhs - kBoundTolerance && vt.eta >= rhs_gamma_factor - kBoundTolerance) ? 1.0 : 0.0}};
  rep.finalize();
  return rep;
}

// Dataset-driven variant: pi_D from counts; unseen states in the support of
// rho^{pi_D} fall back to uniform and are flagged.
inline BoundReport check_offline_bound(const TabularMdp& src, const TabularMdp& tar,
                                       const std::vector<Transition>& dataset, const TabularPolicy& pi) {
  if (dataset.empty()) throw std::invalid_argument("offline bound needs a nonempty dataset");
  std::vector<std::size_t> unseen;
  TabularPolicy behavior = empirical_policy(dataset, src.n_states, src.n_actions, &unseen);
  BoundReport rep = check_offline_bound(src, tar, behavior, pi);
  OccupancyMeasure occ_d = occupancy(src, behavior);
  for (std::size_t s : unseen)
    if (occ_d.state(static_cast<Eigen::Index>(s)) > 0.0) rep.flagged_states.push_back(s);
  rep.terms["unseen_support_states"] = static_cast<double>(rep.flagged_states.size());
  return rep;
}

}  // namespace vgdf::theory
