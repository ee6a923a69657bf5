#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "vgdf/algo/agent.hpp"
#include "vgdf/baselines/classifier.hpp"
#include "vgdf/baselines/weights.hpp"
#include "vgdf/bench/config.hpp"
#include "vgdf/core/replay_buffer.hpp"
#include "vgdf/envs/envs.hpp"

namespace vgdf::bench {

using algo::Real;
using AgentT = algo::Agent<Real>;
using BatchT = nn::Batch<Real>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricRow {
  long step = 0;  // target-domain steps (source steps / gamma_ratio for source-only phases)
  double target_episode_return = kNaN;
  double fvp_mean = kNaN;
  double fvp_log_mean = kNaN;
  double selected_fraction = kNaN;
  double critic_loss_tar = kNaN;
  double critic_loss_src = kNaN;
  double dynamics_nll = kNaN;
  double policy_entropy = kNaN;
};

// Per-step selection bookkeeping over every filtered update of a run.
struct SelectionAudit {
  long filtered_steps = 0;
  long count_mismatches = 0;     // selected != max(1, floor(B xi / 100))
  long log_mask_mismatches = 0;  // mask(Lambda) != mask(log Lambda)
};

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  double final_return = kNaN;
  SelectionAudit audit;
  double seconds = 0.0;
  std::shared_ptr<AgentT> agent;
};

// One environment with its own episode bookkeeping (time-limit resets).
class Rollout {
 public:
  Rollout(std::unique_ptr<envs::Env> env, SeededRng rng) : env_(std::move(env)), rng_(rng) {
    state_ = env_->reset(rng_);
  }
  const std::vector<double>& state() const { return state_; }
  envs::Env& env() { return *env_; }

  Transition step(const std::vector<double>& action, Domain domain) {
    envs::StepResult r = env_->step(action);
    Transition t;
    t.state = state_;
    t.action = action;
    t.reward = r.reward;
    t.next_state = r.state;
    t.terminal = r.terminal;
    t.domain = domain;
    ++t_;
    state_ = r.state;
    if (r.terminal || t_ >= env_->horizon()) {
      state_ = env_->reset(rng_);
      t_ = 0;
    }
    return t;
  }

  std::vector<double> random_action() {
    std::vector<double> a(static_cast<std::size_t>(env_->action_dim()));
    for (double& v : a) v = rng_.uniform(-1.0, 1.0);
    return a;
  }

 private:
  std::unique_ptr<envs::Env> env_;
  SeededRng rng_;
  std::vector<double> state_;
  int t_ = 0;
};

// Mean undiscounted return of the policy's mean action over full episodes.
inline double evaluate(const envs::Env& proto, const AgentT& agent, long episodes, SeededRng& rng) {
  double total = 0.0;
  for (long e = 0; e < episodes; ++e) {
    auto env = proto.clone();
    std::vector<double> s = env->reset(rng);
    for (int t = 0; t < env->horizon(); ++t) {
      envs::StepResult r = env->step(agent.act(s, rng, false, true));
      total += r.reward;
      s = r.state;
      if (r.terminal) break;
    }
  }
  return total / static_cast<double>(episodes);
}

// NaN-skipping running means of update diagnostics between evaluations.
class StatAccumulator {
 public:
  void add(const algo::UpdateStats& st) {
    put(0, st.fvp_mean);
    put(1, st.fvp_log_mean);
    put(2, st.selected_fraction);
    put(3, st.critic_loss_tar);
    put(4, st.critic_loss_src);
    put(6, st.policy_entropy);
  }
  void add_nll(double v) { put(5, v); }
  MetricRow flush(long step, double ret) {
    MetricRow r;
    r.step = step;
    r.target_episode_return = ret;
    r.fvp_mean = mean(0);
    r.fvp_log_mean = mean(1);
    r.selected_fraction = mean(2);
    r.critic_loss_tar = mean(3);
    r.critic_loss_src = mean(4);
    r.dynamics_nll = mean(5);
    r.policy_entropy = mean(6);
    for (auto& s : sum_) s = 0.0;
    for (auto& c : count_) c = 0;
    return r;
  }

 private:
  void put(int i, double v) {
    if (std::isnan(v)) return;
    sum_[i] += v;
    ++count_[i];
  }
  double mean(int i) const { return count_[i] ? sum_[i] / static_cast<double>(count_[i]) : kNaN; }
  double sum_[7] = {};
  long count_[7] = {};
};

inline bool method_explores(const ExperimentConfig& c) {
  const std::string& m = c.method;
  return c.vgdf.explore && (m == "vgdf" || m == "mix" || m == "value_filter" || m == "fvp_iw" || m == "dgdf");
}

inline bool method_uses_model(const std::string& m) { return m == "vgdf" || m == "fvp_iw" || m == "vgdf_bc"; }

inline bool method_uses_classifiers(const std::string& m) { return m == "iw_clip" || m == "darc" || m == "dgdf"; }

// Source dataset for the offline variant: a partially trained source policy
// rolled out stochastically.
ReplayBuffer make_offline_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

// Trains one seed of one method.
class Runner {
 public:
  Runner(const ExperimentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed), rng_(seed * 0x9E3779B97F4A7C15ULL + 1) {
    cfg_.validate();
    auto pair = envs::make_domain_pair(cfg.env, cfg.shift_spec());
    source_ = std::move(pair.first);
    target_ = std::move(pair.second);
    agent_ = std::make_shared<AgentT>(source_->state_dim(), source_->action_dim(), cfg.vgdf);
    SeededRng init_rng = rng_.fork();
    agent_->init(init_rng);
    src_env_rng_ = rng_.fork();
    tar_env_rng_ = rng_.fork();
    if (method_uses_classifiers(cfg.method)) {
      classifiers_ = std::make_unique<baselines::DomainClassifierPair<Real>>(
          source_->state_dim(), source_->action_dim(), static_cast<int>(cfg.vgdf.hidden_width),
          static_cast<int>(cfg.vgdf.hidden_depth), cfg.vgdf.learning_rate, cfg.classifier_noise);
      classifiers_->init(init_rng);
    }
  }

  RunResult run() {
    auto t0 = std::chrono::steady_clock::now();
    result_.method = cfg_.method;
    result_.seed = seed_;
    const std::string& m = cfg_.method;
    if (m == "zero_shot" || m == "finetune") {
      run_single(*source_, src_env_rng_, cfg_.resolved_source_steps(), Domain::Source, cfg_.vgdf.gamma_ratio, 0);
      if (m == "finetune") run_single(*target_, tar_env_rng_, cfg_.target_steps, Domain::Target, 1, cfg_.target_steps);
    } else if (m == "oracle") {
      run_single(*target_, tar_env_rng_, cfg_.oracle_steps, Domain::Target, 1, 0);
    } else if (m == "vgdf_bc" || m == "bc_only") {
      ReplayBuffer data = cfg_.dataset_path.empty() ? make_offline_dataset(cfg_, seed_)
                                                    : ReplayBuffer::load_binary(cfg_.dataset_path);
      if (data.size() == 0) throw std::invalid_argument("offline source dataset is empty");
      if (m == "vgdf_bc") run_offline(data);
      else run_bc_only(data);
    } else {
      run_shared();
    }
    result_.final_return = result_.rows.empty() ? kNaN : result_.rows.back().target_episode_return;
    result_.agent = agent_;
    result_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result_;
  }

  AgentT& agent() { return *agent_; }

  // Plain soft actor-critic in one domain for `steps` interactions; rows are
  // logged every eval_every * scale steps at step offset + i / scale.
  void run_single(const envs::Env& env, SeededRng& env_rng, long steps, Domain domain, long scale, long offset,
                  bool log = true) {
    Rollout ro(env.clone(), env_rng.fork());
    ReplayBuffer buf;
    const auto& c = cfg_.vgdf;
    StatAccumulator acc;
    for (long i = 0; i < steps; ++i) {
      bool random = i < c.random_steps;
      auto a = random ? ro.random_action() : agent_->act(ro.state(), rng_);
      buf.push(ro.step(a, domain));
      if (!random) {
        BatchT b = nn::make_batch<Real>(buf.sample(static_cast<std::size_t>(c.batch_size), rng_));
        algo::UpdateStats st;
        nn::RowVec<Real> w = nn::RowVec<Real>::Constant(b.size(), Real(1) / static_cast<Real>(b.size()));
        auto n_tar = domain == Domain::Target ? b.size() : Eigen::Index(0);
        auto loss = algo::td_step(agent_->critics, agent_->critic_opt, b, w, n_tar, agent_->pi, c.lambda, c.discount, rng_);
        st.critic_loss_tar = loss.target;
        st.critic_loss_src = loss.source;
        algo::actor_step(*agent_, b.s, rng_, st, false);
        acc.add(st);
      }
      if (log && ((i + 1) % (cfg_.eval_every * scale) == 0 || i + 1 == steps))
        log_row(acc, offset + (i + 1) / scale);
    }
  }

 private:
  void log_row(StatAccumulator& acc, long step) {
    SeededRng eval_rng(seed_ * 1000003ULL + static_cast<std::uint64_t>(step) + 17);
    double ret = evaluate(*target_, *agent_, cfg_.eval_episodes, eval_rng);
    result_.rows.push_back(acc.flush(step, ret));
  }

  void audit(const algo::UpdateStats& st) {
    if (!st.filtered) return;
    ++result_.audit.filtered_steps;
    if (st.selected_count != cfg_.vgdf.selected_count()) ++result_.audit.count_mismatches;
    if (!st.log_mask_matches) ++result_.audit.log_mask_mismatches;
  }

  double train_model(const ReplayBuffer& d_tar) {
    BatchT b = nn::make_batch<Real>(d_tar.sample(static_cast<std::size_t>(cfg_.vgdf.ensemble_batch), rng_));
    auto nll = agent_->model.train_step(b, rng_);
    double mean = 0.0;
    for (double v : nll) mean += v;
    return mean / static_cast<double>(nll.size());
  }

  // Online source and target access; the method decides how source
  // transitions enter the critic update.
  void run_shared() {
    const auto& c = cfg_.vgdf;
    const std::string& m = cfg_.method;
    Rollout src(source_->clone(), src_env_rng_.fork()), tar(target_->clone(), tar_env_rng_.fork());
    ReplayBuffer d_src, d_tar;
    StatAccumulator acc;
    const long n_src = cfg_.resolved_source_steps(), G = c.gamma_ratio;
    const bool explore = method_explores(cfg_), model = method_uses_model(m);
    const auto B = static_cast<std::size_t>(c.batch_size);
    for (long i = 0; i < n_src; ++i) {
      const bool random = i < c.random_steps;
      d_src.push(src.step(random ? src.random_action() : agent_->act(src.state(), rng_, explore), Domain::Source));
      if (i % G == 0) {
        Transition t = tar.step(random ? tar.random_action() : agent_->act(tar.state(), rng_), Domain::Target);
        agent_->model.observe(t);
        d_tar.push(std::move(t));
      }
      if (!random) {
        if (model && i % c.ensemble_every == 0) acc.add_nll(train_model(d_tar));
        BatchT b_tar = nn::make_batch<Real>(d_tar.sample(B, rng_));
        BatchT b_src = nn::make_batch<Real>(d_src.sample(B, rng_));
        const bool warm = i < c.warm_start;
        algo::UpdateStats st = update(b_tar, b_src, warm, explore);
        audit(st);
        acc.add(st);
      }
      if ((i + 1) % (cfg_.eval_every * G) == 0 || i + 1 == n_src) log_row(acc, (i + 1 + G - 1) / G);
    }
  }

  algo::UpdateStats weighted(const BatchT& b_tar, const BatchT& b_src, const std::vector<double>& w, bool explore,
                             algo::UpdateStats st = {}) {
    const auto& c = cfg_.vgdf;
    auto loss = algo::source_weighted_critic_step(agent_->critics, agent_->critic_opt, b_tar, b_src, w, agent_->pi,
                                                  c.lambda, c.discount, rng_);
    st.critic_loss_tar = loss.target;
    st.critic_loss_src = loss.source;
    algo::actor_step(*agent_, algo::union_states(b_tar, b_src), rng_, st, explore);
    return st;
  }

  algo::UpdateStats masked(const BatchT& b_tar, const BatchT& b_src, const algo::SelectionMask& mask, bool explore) {
    algo::UpdateStats st;
    st.filtered = true;
    st.selected_count = mask.selected_count;
    st.selected_fraction = static_cast<double>(mask.selected_count) / static_cast<double>(b_src.size());
    return weighted(b_tar, b_src, algo::filtered_weights(mask, static_cast<std::size_t>(b_src.size()), cfg_.vgdf.xi),
                    explore, st);
  }

  algo::UpdateStats update(const BatchT& b_tar, const BatchT& b_src, bool warm, bool explore) {
    const auto& c = cfg_.vgdf;
    const std::string& m = cfg_.method;
    const auto n = static_cast<std::size_t>(b_src.size());
    if (m == "vgdf") return algo::vgdf_update(*agent_, b_tar, b_src, !warm, rng_);
    std::vector<double> delta_r;
    if (classifiers_) {
      classifiers_->train(b_src, b_tar, rng_);
      if (!warm) delta_r = classifiers_->delta_reward(b_src);
    }
    if (m == "darc") {
      // Source-only critic on r + Delta r; target data only trains the classifiers.
      BatchT b = b_src;
      for (std::size_t j = 0; j < delta_r.size(); ++j) b.r(static_cast<Eigen::Index>(j)) += static_cast<Real>(delta_r[j]);
      nn::RowVec<Real> w = nn::RowVec<Real>::Constant(b.size(), Real(1) / static_cast<Real>(b.size()));
      algo::UpdateStats st;
      auto loss = algo::td_step(agent_->critics, agent_->critic_opt, b, w, 0, agent_->pi, c.lambda, c.discount, rng_);
      st.critic_loss_src = loss.source;
      algo::actor_step(*agent_, b.s, rng_, st, false);
      return st;
    }
    if (warm || m == "mix") return weighted(b_tar, b_src, algo::mix_weights(n), explore);
    if (m == "iw_clip") return weighted(b_tar, b_src, baselines::iw_clip_weights(delta_r), explore);
    if (m == "dgdf") return masked(b_tar, b_src, baselines::dgdf_mask(baselines::dgdf_discrepancy(delta_r), c.xi), explore);
    if (m == "value_filter") {
      nn::RowVec<Real> q = agent_->critics.min_value(b_src.s, b_src.a);
      std::vector<double> qs(q.data(), q.data() + q.size());
      return masked(b_tar, b_src, baselines::value_filter_mask(qs, c.xi), explore);
    }
    if (m == "fvp_iw") {
      if (!agent_->model.trained()) return weighted(b_tar, b_src, algo::mix_weights(n), explore);
      auto est = algo::fvp_batch(b_src.s, b_src.a, b_src.s2, agent_->model, agent_->pi, agent_->critics, rng_,
                                 c.fve_mean_action, c.variance_floor);
      // Normalized weights sum to 1; halved so the source half weighs as much as the target half.
      auto w = baselines::fvp_iw_weights(est);
      for (double& v : w) v *= 0.5;
      algo::UpdateStats st;
      st.fvp_mean = algo::fvp_batch_mean(est);
      st.fvp_log_mean = algo::fvp_batch_log_mean(est);
      return weighted(b_tar, b_src, w, explore, st);
    }
    throw std::invalid_argument("method '" + m + "' has no shared-data update");
  }

  // Offline source dataset plus online target steps; train_repeat updates per step.
  void run_offline(const ReplayBuffer& data) {
    const auto& c = cfg_.vgdf;
    Rollout tar(target_->clone(), tar_env_rng_.fork());
    ReplayBuffer d_tar;
    StatAccumulator acc;
    const auto B = static_cast<std::size_t>(c.batch_size);
    const long random_target = c.random_steps / c.gamma_ratio;
    long updates = 0;
    for (long i = 0; i < cfg_.target_steps; ++i) {
      const bool random = i < random_target;
      Transition t = tar.step(random ? tar.random_action() : agent_->act(tar.state(), rng_), Domain::Target);
      agent_->model.observe(t);
      d_tar.push(std::move(t));
      if (!random) {
        for (long k = 0; k < c.train_repeat; ++k, ++updates) {
          if (updates % c.ensemble_every == 0) acc.add_nll(train_model(d_tar));
          BatchT b_tar = nn::make_batch<Real>(d_tar.sample(B, rng_));
          BatchT b_src = nn::make_batch<Real>(data.sample(B, rng_));
          algo::UpdateStats st = algo::vgdf_bc_update(*agent_, b_tar, b_src, rng_);
          audit(st);
          acc.add(st);
        }
      }
      if ((i + 1) % cfg_.eval_every == 0 || i + 1 == cfg_.target_steps) log_row(acc, i + 1);
    }
  }

  // Behavior cloning on the dataset alone, evaluated zero-shot in the target.
  void run_bc_only(const ReplayBuffer& data) {
    const auto& c = cfg_.vgdf;
    StatAccumulator acc;
    nn::PolicyLossOptions o;
    o.q_weight = 0.0;
    for (long i = 0; i < cfg_.bc_steps; ++i) {
      BatchT b = nn::make_batch<Real>(data.sample(static_cast<std::size_t>(c.batch_size), rng_));
      nn::policy_update(agent_->pi, agent_->pi_opt, agent_->critics, b.s, o, rng_, &b.s, &b.a);
    }
    log_row(acc, 0);
  }

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  SeededRng rng_;
  SeededRng src_env_rng_, tar_env_rng_;
  std::unique_ptr<envs::Env> source_, target_;
  std::shared_ptr<AgentT> agent_;
  std::unique_ptr<baselines::DomainClassifierPair<Real>> classifiers_;
  RunResult result_;
};

inline ReplayBuffer make_offline_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  ExperimentConfig c = cfg;
  c.method = "zero_shot";
  c.shift = "none";
  Runner trainer(c, seed ^ 0x5DEECE66DULL);
  SeededRng env_rng(seed * 7919 + 3), act_rng(seed * 104729 + 5);
  auto env = envs::make_env(cfg.env);
  if (cfg.dataset_policy_steps > 0) trainer.run_single(*env, env_rng, cfg.dataset_policy_steps, Domain::Source, 1, 0, false);
  Rollout ro(env->clone(), env_rng.fork());
  ReplayBuffer data(static_cast<std::size_t>(cfg.dataset_size));
  for (long i = 0; i < cfg.dataset_size; ++i) data.push(ro.step(trainer.agent().act(ro.state(), act_rng), Domain::Source));
  return data;
}

inline const char* kMetricsHeader =
    "config_hash,method,env,shift_kind,seed,step,target_episode_return,fvp_mean,fvp_log_mean,selected_fraction,"
    "critic_loss_tar,critic_loss_src,dynamics_nll,policy_entropy";

inline void write_metrics(std::ostream& os, const ExperimentConfig& cfg, const RunResult& r) {
  const std::string hash = hex64(cfg.hash());
  const std::string kind = envs::to_string(cfg.shift_spec().kind);
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
  for (const auto& row : r.rows)
    os << hash << ',' << r.method << ',' << cfg.env << ',' << kind << ',' << r.seed << ',' << row.step << ','
       << num(row.target_episode_return) << ',' << num(row.fvp_mean) << ',' << num(row.fvp_log_mean) << ','
       << num(row.selected_fraction) << ',' << num(row.critic_loss_tar) << ',' << num(row.critic_loss_src) << ','
       << num(row.dynamics_nll) << ',' << num(row.policy_entropy) << '\n';
}

inline void append_metrics(const std::string& path, const ExperimentConfig& cfg, const RunResult& r) {
  bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write metrics " + path);
  if (fresh) out << kMetricsHeader << '\n';
  write_metrics(out, cfg, r);
}

inline nn::Checkpoint make_checkpoint(const ExperimentConfig& cfg, const RunResult& r) {
  nn::Checkpoint ck;
  ck.config_text = cfg.to_text();
  ck.add_vector("seed", nn::Vec<double>(nn::Vec<double>::Constant(1, static_cast<double>(r.seed))));
  r.agent->save(ck);
  return ck;
}

inline std::unique_ptr<AgentT> agent_from_checkpoint(const nn::Checkpoint& ck, ExperimentConfig* cfg_out = nullptr) {
  ExperimentConfig cfg = ExperimentConfig::parse(ck.config_text);
  auto env = envs::make_env(cfg.env);
  auto agent = std::make_unique<AgentT>(env->state_dim(), env->action_dim(), cfg.vgdf);
  agent->load(ck);
  if (cfg_out) *cfg_out = cfg;
  return agent;
}

inline RunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) { return Runner(cfg, seed).run(); }

// Runs every seed; with out_dir set, appends metrics.csv and writes one
// checkpoint per seed.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  std::vector<RunResult> out;
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  for (auto seed : cfg.seed_list()) {
    RunResult r = run_seed(cfg, seed);
    if (!cfg.out_dir.empty()) {
      append_metrics(cfg.out_dir + "/metrics.csv", cfg, r);
      make_checkpoint(cfg, r).save(cfg.out_dir + "/checkpoint_seed" + std::to_string(seed) + ".bin");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vgdf::bench
