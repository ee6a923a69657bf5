#pragma once

#include <ostream>
#include <vector>

#include "vgdf/theory/telescoping.hpp"

namespace vgdf::theory {

struct AuditOptions {
  std::size_t trials = 200;
  std::size_t max_states = 6;
  std::size_t max_actions = 4;
  double min_discount = 0.5;
  double max_discount = 0.99;
  std::uint64_t seed = 0;
};

struct AuditRow {
  std::size_t trial = 0;
  BoundReport report;
};

// One random instance: an MDP pair sharing rewards/discount/start, an
// evaluation policy and a behavior policy for the offline bound.
struct AuditInstance {
  TabularMdp source;
  TabularMdp target;
  TabularPolicy policy;
  TabularPolicy behavior;
};

inline AuditInstance random_instance(const AuditOptions& opt, SeededRng& rng) {
  std::size_t states = 1 + rng.index(opt.max_states);
  std::size_t actions = 1 + rng.index(opt.max_actions);
  double gamma = rng.uniform(opt.min_discount, opt.max_discount);
  AuditInstance inst;
  inst.source = random_mdp(states, actions, gamma, rng);
  inst.target = with_random_dynamics(inst.source, rng);
  inst.policy = TabularPolicy::random(states, actions, rng);
  inst.behavior = TabularPolicy::random(states, actions, rng);
  return inst;
}

// Randomized audit of the three performance bounds.
inline std::vector<AuditRow> run_bound_audit(const AuditOptions& opt) {
  SeededRng rng(opt.seed);
  std::vector<AuditRow> rows;
  rows.reserve(opt.trials * 3);
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    AuditInstance inst = random_instance(opt, rng);
    rows.push_back({trial, check_dynamics_bound(inst.source, inst.target, inst.policy)});
    rows.push_back({trial, check_value_bound(inst.source, inst.target, inst.policy)});
    rows.push_back({trial, check_offline_bound(inst.source, inst.target, inst.behavior, inst.policy)});
  }
  return rows;
}

inline void write_audit_csv(std::ostream& os, const std::vector<AuditRow>& rows) {
  os << "trial,bound_name,lhs,rhs,slack,satisfied\n";
  os.precision(17);
  for (const auto& row : rows)
    os << row.trial << ',' << row.report.name << ',' << row.report.lhs << ',' << row.report.rhs << ','
       << row.report.slack << ',' << (row.report.satisfied ? 1 : 0) << '\n';
}

}  // namespace vgdf::theory
