#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vgdf/bench/ablation.hpp"
#include "vgdf/core/heap.hpp"
#include "vgdf/tabular/motivation.hpp"
#include "vgdf/theory/audit.hpp"

using namespace vgdf;

namespace {

bench::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  KeyValues kv = path.empty() ? KeyValues() : KeyValues::load(path);
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + o + "'");
    kv.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return bench::ExperimentConfig::from(kv);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

void print_runs(const std::vector<bench::RunResult>& runs) {
  for (const auto& r : runs)
    std::cout << r.method << " seed " << r.seed << " final_target_return " << r.final_return << " ("
              << r.seconds << " s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  keep_heap_warm();
  CLI::App app{"Value-guided data filtering toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  long seed = -1;
  auto* train = app.add_subcommand("train", "Train one method on one domain pair");
  train->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "single seed (overrides the config's seed list)");
  train->add_option("--out", out_dir, "output directory for metrics.csv and checkpoints");
  train->add_option("--set", overrides, "extra key=value overrides");

  std::string checkpoint, shift_override;
  long episodes = 10;
  long eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint in its target domain");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--shift", shift_override, "evaluate under this shift instead of the trained one");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  theory::AuditOptions audit;
  std::string report = "report.csv";
  auto* verify = app.add_subcommand("verify-bounds", "Audit the performance bounds on random tabular MDPs");
  verify->add_option("--trials", audit.trials, "random instances");
  verify->add_option("--max-states", audit.max_states, "largest state count");
  verify->add_option("--max-actions", audit.max_actions, "largest action count");
  verify->add_option("--seed", audit.seed, "seed");
  verify->add_option("--out", report, "CSV report path");

  tabular::MotivationConfig mot;
  std::string layouts = std::string(VGDF_DATA_DIR) + "/layouts", mot_out = "motivation", mot_seeds = "0,1,2,3,4";
  auto* motivation = app.add_subcommand("motivation", "Tabular grid-world motivation experiment");
  motivation->add_option("--out", mot_out, "output directory");
  motivation->add_option("--layouts", layouts, "directory with source.txt and target.txt");
  motivation->add_option("--source-steps", mot.source_steps, "source interactions");
  motivation->add_option("--target-steps", mot.target_steps, "target interactions");
  motivation->add_option("--seeds", mot_seeds, "comma-separated seeds");

  std::string sweep, ablate_config, ablate_out = "ablation";
  std::vector<std::string> ablate_overrides;
  auto* ablate = app.add_subcommand("ablate", "Run one ablation sweep");
  ablate->add_option("--sweep", sweep, "gamma_ratio|xi|ensemble|explore|iw_vs_reject|value_filter|dgdf")->required();
  ablate->add_option("--config", ablate_config, "base config")->check(CLI::ExistingFile);
  ablate->add_option("--out", ablate_out, "output directory");
  ablate->add_option("--set", ablate_overrides, "extra key=value overrides");

  std::string q_checkpoint, q_shifts = "none,clamp_small,clamp_large", q_out;
  bench::QuantifyOptions qopt;
  auto* quantify = app.add_subcommand("quantify-shift", "Batch-mean fictitious value proximity per shift");
  quantify->add_option("--checkpoint", q_checkpoint, "checkpoint with an ensemble")->required()->check(CLI::ExistingFile);
  quantify->add_option("--shifts", q_shifts, "comma-separated shifts");
  quantify->add_option("--out", q_out, "trace CSV (stdout when empty)");
  quantify->add_option("--target-transitions", qopt.target_transitions, "target transitions per shift");
  quantify->add_option("--train-steps", qopt.train_steps, "ensemble fine-tuning steps per shift");
  quantify->add_option("--log-every", qopt.log_every, "trace interval");
  quantify->add_option("--seed", qopt.seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      bench::ExperimentConfig cfg = load_config(config_path, overrides);
      if (seed >= 0) cfg.seeds = std::to_string(seed);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (cfg.out_dir.empty()) cfg.out_dir = "runs/" + cfg.method;
      std::cout << "config " << hex64(cfg.hash()) << " -> " << cfg.out_dir << '\n';
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream(cfg.out_dir + "/config.cfg") << cfg.to_text();
      print_runs(bench::run_experiment(cfg));
    } else if (*eval) {
      bench::ExperimentConfig cfg;
      nn::Checkpoint ck = nn::Checkpoint::load(checkpoint);
      auto agent = bench::agent_from_checkpoint(ck, &cfg);
      if (!shift_override.empty()) cfg.shift = shift_override;
      auto pair = envs::make_domain_pair(cfg.env, cfg.shift_spec());
      SeededRng rng(static_cast<std::uint64_t>(eval_seed));
      double ret = bench::evaluate(*pair.second, *agent, episodes, rng);
      std::cout << "env " << cfg.env << " shift " << cfg.shift << " episodes " << episodes << " mean_return "
                << format_double(ret) << '\n';
    } else if (*verify) {
      auto rows = theory::run_bound_audit(audit);
      std::ofstream out(report);
      if (!out) throw std::runtime_error("cannot write " + report);
      theory::write_audit_csv(out, rows);
      std::size_t violated = 0;
      for (const auto& r : rows) violated += !r.report.satisfied;
      std::cout << rows.size() << " bound checks, " << violated << " violated -> " << report << '\n';
    } else if (*motivation) {
      mot.seeds.clear();
      for (const auto& s : split_list(mot_seeds)) mot.seeds.push_back(std::stoull(s));
      auto src = tabular::GridLayout::load(layouts + "/source.txt");
      auto tar = tabular::GridLayout::load(layouts + "/target.txt");
      auto runs = tabular::run_motivation(src, tar, mot);
      tabular::write_motivation(mot_out, tar, runs);
      for (auto m : {tabular::TabularMethod::QLearningTarget, tabular::TabularMethod::Darc, tabular::TabularMethod::Vgdf})
        std::cout << tabular::to_string(m) << " success " << tabular::mean_success(runs, m) << '\n';
    } else if (*ablate) {
      bench::ExperimentConfig base = load_config(ablate_config, ablate_overrides);
      auto results = bench::run_ablation(sweep, base, ablate_out);
      bench::write_summary(std::cout, results);
    } else if (*quantify) {
      bench::ExperimentConfig cfg;
      auto agent = bench::agent_from_checkpoint(nn::Checkpoint::load(q_checkpoint), &cfg);
      auto traces = bench::quantify_shift(*agent, cfg.env, split_list(q_shifts), qopt);
      if (q_out.empty()) {
        bench::write_traces(std::cout, traces);
      } else {
        std::ofstream out(q_out);
        if (!out) throw std::runtime_error("cannot write " + q_out);
        bench::write_traces(out, traces);
        for (const auto& t : traces) std::cout << t.shift << " final_fvp_mean " << format_double(t.final_mean()) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
