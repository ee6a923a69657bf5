#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "vgdf/bench/experiment.hpp"

namespace vgdf::bench {

struct AblationVariant {
  std::string label;
  ExperimentConfig config;
};

struct AblationResult {
  std::string sweep;
  std::string label;
  ExperimentConfig config;
  std::vector<RunResult> runs;
  double mean_final() const;
  double std_final() const;  // population std over seeds
};

inline double AblationResult::mean_final() const {
  double s = 0.0;
  for (const auto& r : runs) s += r.final_return;
  return runs.empty() ? kNaN : s / static_cast<double>(runs.size());
}

inline double AblationResult::std_final() const {
  if (runs.empty()) return kNaN;
  double m = mean_final(), s = 0.0;
  for (const auto& r : runs) s += (r.final_return - m) * (r.final_return - m);
  return std::sqrt(s / static_cast<double>(runs.size()));
}

inline const std::vector<std::string>& known_sweeps() {
  static const std::vector<std::string> s = {"gamma_ratio", "xi",           "ensemble", "explore",
                                             "iw_vs_reject", "value_filter", "dgdf"};
  return s;
}

// Variants of one sweep around `base`. The Gamma sweep keeps the target budget
// fixed, so the source budget grows with the ratio.
inline std::vector<AblationVariant> ablation_variants(const std::string& sweep, const ExperimentConfig& base) {
  std::vector<AblationVariant> out;
  auto add = [&](std::string label, const std::function<void(ExperimentConfig&)>& edit) {
    ExperimentConfig c = base;
    edit(c);
    c.validate();
    out.push_back({std::move(label), c});
  };
  auto method = [&](const std::string& m) { add(m, [&](ExperimentConfig& c) { c.method = m; }); };
  if (sweep == "gamma_ratio") {
    for (long g : {5L, 10L, 20L})
      add("gamma_" + std::to_string(g), [&](ExperimentConfig& c) {
        c.vgdf.gamma_ratio = g;
        c.source_steps = 0;
      });
  } else if (sweep == "xi") {
    for (double xi : {10.0, 25.0, 50.0, 75.0})
      add("xi_" + format_double(xi), [&](ExperimentConfig& c) { c.vgdf.xi = xi; });
  } else if (sweep == "ensemble") {
    for (long m : {2L, 3L, 5L, 7L})
      add("members_" + std::to_string(m), [&](ExperimentConfig& c) { c.vgdf.ensemble_size = m; });
  } else if (sweep == "explore") {
    add("with_explore", [](ExperimentConfig& c) { c.vgdf.explore = true; });
    add("without_explore", [](ExperimentConfig& c) { c.vgdf.explore = false; });
  } else if (sweep == "iw_vs_reject") {
    method("vgdf");
    method("fvp_iw");
  } else if (sweep == "value_filter") {
    method("vgdf");
    method("value_filter");
  } else if (sweep == "dgdf") {
    method("vgdf");
    method("dgdf");
  } else {
    throw std::invalid_argument("unknown sweep '" + sweep + "'");
  }
  return out;
}

inline const char* kComparisonHeader = "sweep,variant,method,config_hash,seed,final_target_return";
inline const char* kSummaryHeader = "sweep,variant,method,config_hash,seeds,mean_final_return,std_final_return";

inline void write_comparison(std::ostream& os, const std::vector<AblationResult>& results) {
  os << kComparisonHeader << '\n';
  for (const auto& a : results)
    for (const auto& r : a.runs)
      os << a.sweep << ',' << a.label << ',' << a.config.method << ',' << hex64(a.config.hash()) << ',' << r.seed
         << ',' << format_double(r.final_return) << '\n';
}

inline void write_summary(std::ostream& os, const std::vector<AblationResult>& results) {
  os << kSummaryHeader << '\n';
  for (const auto& a : results)
    os << a.sweep << ',' << a.label << ',' << a.config.method << ',' << hex64(a.config.hash()) << ','
       << a.runs.size() << ',' << format_double(a.mean_final()) << ',' << format_double(a.std_final()) << '\n';
}

// Runs every variant of `sweep`. With out_dir set, each variant writes its
// metrics and checkpoints to out_dir/<label>, and comparison.csv plus
// summary.csv land in out_dir.
inline std::vector<AblationResult> run_ablation(const std::string& sweep, const ExperimentConfig& base,
                                                const std::string& out_dir = "") {
  std::vector<AblationResult> results;
  for (auto& v : ablation_variants(sweep, base)) {
    ExperimentConfig c = v.config;
    c.out_dir = out_dir.empty() ? "" : out_dir + "/" + v.label;
    results.push_back({sweep, v.label, c, run_experiment(c)});
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream cmp(out_dir + "/comparison.csv"), sum(out_dir + "/summary.csv");
    if (!cmp || !sum) throw std::runtime_error("cannot write ablation outputs in " + out_dir);
    write_comparison(cmp, results);
    write_summary(sum, results);
  }
  return results;
}

struct QuantifyOptions {
  long target_transitions = 5000;  // collected in each shifted target
  long train_steps = 2000;         // ensemble fine-tuning steps per shift
  long log_every = 200;
  long eval_transitions = 1000;    // fixed source batch scored at each log point
  std::uint64_t seed = 0;
};

struct FvpTracePoint {
  long step = 0;
  double fvp_mean = 0.0;
  double fvp_log_mean = 0.0;
};

struct ShiftTrace {
  std::string shift;
  std::vector<FvpTracePoint> points;
  double final_mean() const { return points.empty() ? kNaN : points.back().fvp_mean; }
  double final_log_mean() const { return points.empty() ? kNaN : points.back().fvp_log_mean; }
};

// Transitions from the agent's stochastic policy.
inline std::vector<Transition> policy_transitions(const envs::Env& env, const AgentT& agent, long n, SeededRng& rng,
                                                  Domain domain) {
  Rollout ro(env.clone(), rng.fork());
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(ro.step(agent.act(ro.state(), rng), domain));
  return out;
}

// For each shift: fine-tune a copy of the checkpoint's ensemble on policy
// data from the shifted target, logging batch-mean Lambda of one fixed batch
// of source transitions. The policy and critics stay frozen, so traces are
// comparable across shifts.
inline std::vector<ShiftTrace> quantify_shift(const AgentT& base, const std::string& env_name,
                                              const std::vector<std::string>& shifts, const QuantifyOptions& opt) {
  if (opt.train_steps <= 0 || opt.log_every <= 0 || opt.target_transitions <= 0 || opt.eval_transitions <= 0)
    throw std::invalid_argument("quantify-shift budgets must be positive");
  SeededRng src_rng(opt.seed * 31 + 7);
  auto source = envs::make_env(env_name);
  BatchT eval = nn::make_batch<Real>(policy_transitions(*source, base, opt.eval_transitions, src_rng, Domain::Source));
  const auto B = static_cast<std::size_t>(base.cfg.ensemble_batch);
  std::vector<ShiftTrace> traces;
  for (const auto& name : shifts) {
    auto pair = envs::make_domain_pair(env_name, envs::ShiftSpec::parse(name));
    AgentT agent = base;
    SeededRng rng(opt.seed * 31 + 11);
    ReplayBuffer d_tar;
    for (auto& t : policy_transitions(*pair.second, agent, opt.target_transitions, rng, Domain::Target)) {
      agent.model.observe(t);
      d_tar.push(std::move(t));
    }
    ShiftTrace trace{name, {}};
    for (long step = 1; step <= opt.train_steps; ++step) {
      agent.model.train_step(nn::make_batch<Real>(d_tar.sample(B, rng)), rng);
      if (step % opt.log_every == 0 || step == opt.train_steps) {
        SeededRng score_rng(opt.seed * 31 + 13);
        auto est = algo::fvp_batch(eval.s, eval.a, eval.s2, agent.model, agent.pi, agent.critics, score_rng,
                                   agent.cfg.fve_mean_action, agent.cfg.variance_floor);
        trace.points.push_back({step, algo::fvp_batch_mean(est), algo::fvp_batch_log_mean(est)});
      }
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

inline const char* kTraceHeader = "shift,step,fvp_mean,fvp_log_mean";

inline void write_traces(std::ostream& os, const std::vector<ShiftTrace>& traces) {
  os << kTraceHeader << '\n';
  for (const auto& t : traces)
    for (const auto& p : t.points)
      os << t.shift << ',' << p.step << ',' << format_double(p.fvp_mean) << ',' << format_double(p.fvp_log_mean) << '\n';
}

}  // namespace vgdf::bench
