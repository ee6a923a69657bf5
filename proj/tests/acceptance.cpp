// Acceptance suite: one PASS/FAIL line per criterion, pinned tolerances.
// Usage: acceptance [--only name[,name...]] [--smoke]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "support/gradcheck.hpp"
#include "vgdf/bench/ablation.hpp"
#include "vgdf/core/heap.hpp"
#include "vgdf/tabular/motivation.hpp"
#include "vgdf/theory/audit.hpp"

using namespace vgdf;
using nn::Mat;
using nn::Vec;

namespace {

struct Line {
  std::string name;
  bool pass = false;
  std::string detail;
  // Set only for a criterion that cannot hold as written; the reason is in
  // the README. It still prints FAIL but does not fail the exit code.
  bool known_unattainable = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Mat<double> randn(Eigen::Index rows, Eigen::Index cols, SeededRng& rng, double scale = 1.0) {
  Mat<double> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

// ---------------------------------------------------------------- theory

Line bound_audits() {
  auto t0 = std::chrono::steady_clock::now();
  theory::AuditOptions opt;
  opt.trials = 200;
  auto rows = theory::run_bound_audit(opt);
  double secs = seconds_since(t0);
  std::size_t bad = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    bad += !r.report.satisfied || r.report.slack < -1e-9;
    worst = std::min(worst, r.report.slack);
  }
  Line l{"bounds", bad == 0 && rows.size() == 3 * opt.trials && secs < 120.0, ""};
  l.detail = std::to_string(rows.size()) + " reports over " + std::to_string(opt.trials) + " instance pairs, " +
             std::to_string(bad) + " violated, min slack " + num(worst) + ", " + num(secs, 3) + " s";
  return l;
}

// Exhaustive 2-state 2-action grid: dynamics rows and policies from {0, .5, 1}.
std::pair<std::size_t, double> gap_bound_grid() {
  const double probs[3] = {0.0, 0.5, 1.0};
  std::size_t checked = 0;
  double worst = -std::numeric_limits<double>::infinity();
  auto dynamics = [&](TabularMdp& m, int code) {
    for (std::size_t sa = 0; sa < 4; ++sa, code /= 3) {
      double p = probs[code % 3];
      m.p(sa / 2, sa % 2, 0) = p;
      m.p(sa / 2, sa % 2, 1) = 1.0 - p;
    }
  };
  auto policy = [&](int code) {
    theory::TabularPolicy pi(2, 2);
    for (std::size_t s = 0; s < 2; ++s, code /= 3) {
      pi(s, 0) = probs[code % 3];
      pi(s, 1) = 1.0 - pi(s, 0);
    }
    return pi;
  };
  for (double gamma : {0.5, 0.9}) {
    TabularMdp m1(2, 2, gamma), m2(2, 2, gamma);
    for (TabularMdp* m : {&m1, &m2}) {
      m->r(0, 0) = 1.0;
      m->r(1, 1) = 0.5;
      m->initial_dist = {0.7, 0.3};
    }
    for (int c1 = 0; c1 < 81; ++c1) {
      dynamics(m1, c1);
      for (int c2 = 0; c2 < 81; ++c2) {
        dynamics(m2, c2);
        for (int p1 = 0; p1 < 9; ++p1)
          for (int p2 = 0; p2 < 9; ++p2) {
            auto rep = theory::check_gap_bound(m1, m2, policy(p1), policy(p2));
            checked += rep.pairs_checked;
            worst = std::max(worst, rep.max_violation);
          }
      }
    }
  }
  return {checked, worst};
}

Line telescoping() {
  SeededRng rng(1);
  theory::AuditOptions opt;
  const int instances = 200;
  // Candidate constants that reproduce the gap on every instance.
  std::set<std::string> same_fit = {"1/(1-gamma)", "gamma/(1-gamma)"}, two_fit = same_fit;
  double same_best = 0.0, two_one = 0.0, two_gamma = 0.0, two_corrected = 0.0;
  auto keep = [](std::set<std::string>& fit, const theory::TelescopingReport& r) {
    if (r.residual_one_over > theory::kTelescopingTolerance) fit.erase("1/(1-gamma)");
    if (r.residual_gamma_over > theory::kTelescopingTolerance) fit.erase("gamma/(1-gamma)");
  };
  for (int k = 0; k < instances; ++k) {
    auto inst = theory::random_instance(opt, rng);
    auto same = theory::check_telescoping(inst.source, inst.target, inst.policy);
    keep(same_fit, same);
    same_best = std::max(same_best, same.best_residual());
    auto two = theory::check_telescoping(inst.source, inst.target, inst.policy, inst.behavior);
    keep(two_fit, two);
    two_one = std::max(two_one, two.residual_one_over);
    two_gamma = std::max(two_gamma, two.residual_gamma_over);
    two_corrected = std::max(two_corrected, two.residual_with_initial_term);
  }
  auto fit_name = [](const std::set<std::string>& s) { return s.empty() ? std::string("none") : *s.begin(); };
  auto [pairs, worst] = gap_bound_grid();
  const bool same_ok = !same_fit.empty(), two_ok = !two_fit.empty(), grid_ok = worst <= theory::kBoundTolerance;
  Line l{"telescoping", same_ok && two_ok && grid_ok, ""};
  l.known_unattainable = same_ok && grid_ok && !two_ok;
  l.detail = "one policy: constant " + fit_name(same_fit) + " fits " + std::to_string(instances) +
             " instances (max residual " + num(same_best) + "); two policies: constant " + fit_name(two_fit) +
             " (max residual " + num(two_one) + " with 1/(1-gamma), " + num(two_gamma) +
             " with gamma/(1-gamma); " + num(two_corrected) + " once the start-state policy term is added); "
             "pointwise gap bound on " + std::to_string(pairs) + " grid pairs, max excess " + num(worst);
  return l;
}

// ---------------------------------------------------------------- gradients

struct GradTally {
  std::size_t parameterizations = 0, probes = 0, skipped = 0;
  double worst = 0.0;
};

using Pattern = std::function<std::vector<bool>(const Vec<double>&)>;

// Central-difference step. Entries as small as 1e-8 occur in the wide networks,
// and at h = 1e-5 roundoff alone (~1e-16 / h) is then a 5e-4 relative error;
// 1e-4 keeps both roundoff and truncation well under the tolerance.
constexpr double kStep = 1e-4;

void probe(const std::function<double(const Vec<double>&)>& loss, const Vec<double>& p, const Vec<double>& grad,
           const Pattern& pattern, double h, SeededRng& rng, GradTally& t) {
  std::vector<Eigen::Index> coords;
  for (int k = 0; k < 8; ++k) coords.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(p.size()))));
  Vec<double> dir = randn(p.size(), 1, rng);
  dir /= dir.norm();
  auto res = vgdf::testing::check_gradient(loss, p, grad, coords, dir, h, pattern);
  ++t.parameterizations;
  t.probes += res.probes;
  t.skipped += res.skipped;
  t.worst = std::max(t.worst, res.max_rel_error);
}

void append(std::vector<bool>& dst, const std::vector<bool>& src) { dst.insert(dst.end(), src.begin(), src.end()); }

// Policy loss including the critic's ReLU kinks, the twin-min/max pick and
// the log-std clamp, alternating the pessimistic and optimistic aggregate.
GradTally policy_shape(int ds, int da, int w, int d, int count, SeededRng& rng) {
  GradTally t;
  nn::GaussianPolicy<double> pi(ds, da, w, d);
  nn::CriticPair<double> q(ds, da, w, d);
  for (int k = 0; k < count; ++k) {
    pi.init(rng);
    q.init(rng);
    Mat<double> s = randn(ds, 6, rng), bc_s = randn(ds, 4, rng);
    Mat<double> bc_a = randn(da, 4, rng).array().tanh().matrix();
    Mat<double> eps = pi.noise(6, rng);
    nn::PolicyLossOptions o;
    o.aggregate = k % 2 ? nn::QAggregate::Max : nn::QAggregate::Min;
    o.q_weight = 0.7;
    Vec<double> grad;
    nn::policy_loss_gradient(pi, q, s, eps, o, grad, &bc_s, &bc_a);
    nn::GaussianPolicy<double> tmp = pi;
    auto loss = [&](const Vec<double>& p) {
      tmp.net().params() = p;
      Vec<double> unused;
      return nn::policy_loss_gradient(tmp, q, s, eps, o, unused, &bc_s, &bc_a).loss;
    };
    auto pattern = [&](const Vec<double>& p) {
      tmp.net().params() = p;
      auto smp = tmp.sample(s, eps);
      std::vector<bool> bits = vgdf::testing::relu_pattern(tmp.net(), p, s);
      append(bits, vgdf::testing::relu_pattern(tmp.net(), p, bc_s));
      Mat<double> x = nn::stack_rows(s, smp.action);
      for (int i = 0; i < 2; ++i) append(bits, vgdf::testing::relu_pattern(q.q(i), q.q(i).params(), x));
      auto q0 = q.q(0).forward(x), q1 = q.q(1).forward(x);
      for (Eigen::Index j = 0; j < x.cols(); ++j) bits.push_back(q0(0, j) <= q1(0, j));
      for (Eigen::Index i = 0; i < smp.raw_log_std.size(); ++i) {
        double v = smp.raw_log_std.data()[i];
        bits.push_back(v < nn::kLogStdMin);
        bits.push_back(v > nn::kLogStdMax);
      }
      return bits;
    };
    probe(loss, pi.net().params(), grad, pattern, kStep, rng, t);
  }
  return t;
}

GradTally critic_shape(int ds, int da, int w, int d, int count, SeededRng& rng) {
  GradTally t;
  nn::CriticPair<double> q(ds, da, w, d);
  for (int k = 0; k < count; ++k) {
    q.init(rng);
    nn::Batch<double> b;
    b.s = randn(ds, 8, rng);
    b.a = randn(da, 8, rng).array().tanh().matrix();
    b.s2 = randn(ds, 8, rng);
    b.r = randn(1, 8, rng);
    b.done = nn::RowVec<double>::Zero(8);
    nn::RowVec<double> y = randn(1, 8, rng), wts = randn(1, 8, rng).cwiseAbs() / 8.0;
    Vec<double> grads[2];
    nn::weighted_critic_gradient(q, b, y, wts, 4, grads);
    const int i = k % 2;
    nn::CriticPair<double> tmp = q;
    auto loss = [&](const Vec<double>& p) {
      tmp.q(i).params() = p;
      Vec<double> g[2];
      return nn::weighted_critic_gradient(tmp, b, y, wts, 4, g).total();
    };
    // Only critic i moves, so only its kinks matter; the other's loss term is constant.
    Mat<double> x = nn::stack_rows(b.s, b.a);
    auto pattern = [&](const Vec<double>& p) { return vgdf::testing::relu_pattern(q.q(i), p, x); };
    probe(loss, q.q(i).params(), grads[i], pattern, kStep, rng, t);
  }
  return t;
}

GradTally ensemble_shape(int ds, int da, int w, int d, int count, SeededRng& rng) {
  GradTally t;
  dynamics::DynamicsEnsemble<double> ens(ds, da, dynamics::EnsembleConfig{1, w, d, 1e-3});
  for (int k = 0; k < count; ++k) {
    ens.init(rng);
    const auto& net = ens.member(0);
    Mat<double> x = randn(ds + da, 8, rng), y = randn(ds + 1, 8, rng, 0.5);
    Vec<double> grad = Vec<double>::Zero(net.n_params());
    ens.nll_gradient(net, x, y, &grad);
    nn::Mlp<double> tmp = net;
    auto loss = [&](const Vec<double>& p) {
      tmp.params() = p;
      return ens.nll_gradient(tmp, x, y, nullptr);
    };
    // Swish is smooth; the only kink is the final clip of the log-variance.
    auto pattern = [&](const Vec<double>& p) {
      Mat<double> raw = net.forward(p, x, nullptr);
      Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic> slope;
      dynamics::DynamicsEnsemble<double>::soft_clamp_array(raw.bottomRows(ds + 1).array(), &slope);
      std::vector<bool> bits;
      for (Eigen::Index i = 0; i < slope.size(); ++i) bits.push_back(slope.data()[i] == 0.0);
      return bits;
    };
    probe(loss, net.params(), grad, pattern, kStep, rng, t);
  }
  return t;
}

GradTally classifier_shape(int ds, int da, int w, int d, bool sas, int count, SeededRng& rng) {
  GradTally t;
  baselines::DomainClassifierPair<double> c(ds, da, w, d);
  for (int k = 0; k < count; ++k) {
    c.init(rng);
    const nn::Mlp<double>& net = sas ? c.sas() : c.sa();
    Mat<double> x = randn(net.input_dim(), 8, rng);
    std::vector<int> labels;
    for (int j = 0; j < 8; ++j) labels.push_back(static_cast<int>(rng.index(2)));
    Vec<double> grad = Vec<double>::Zero(net.n_params());
    baselines::DomainClassifierPair<double>::cross_entropy(net, x, labels, &grad);
    nn::Mlp<double> tmp = net;
    auto loss = [&](const Vec<double>& p) {
      tmp.params() = p;
      return baselines::DomainClassifierPair<double>::cross_entropy(tmp, x, labels, nullptr);
    };
    auto pattern = [&](const Vec<double>& p) { return vgdf::testing::relu_pattern(net, p, x); };
    probe(loss, net.params(), grad, pattern, kStep, rng, t);
  }
  return t;
}

Line gradients() {
  SeededRng rng(3);
  const int count = 100;
  struct Scale {
    const char* label;
    int width, depth, ens_width, ens_depth;
  };
  const Scale scales[] = {{"desk", 64, 2, 64, 3}, {"full", 256, 2, 200, 5}};
  std::size_t shapes = 0, params = 0, probes = 0, skipped = 0;
  double worst = 0.0;
  bool enough = true;
  for (std::string env_name : {"point_mass", "pendulum"}) {
    auto env = envs::make_env(env_name);
    const int ds = env->state_dim(), da = env->action_dim();
    for (const auto& sc : scales) {
      std::vector<std::pair<std::string, GradTally>> runs = {
          {"policy", policy_shape(ds, da, sc.width, sc.depth, count, rng)},
          {"critic", critic_shape(ds, da, sc.width, sc.depth, count, rng)},
          {"ensemble", ensemble_shape(ds, da, sc.ens_width, sc.ens_depth, count, rng)},
          {"classifier_sas", classifier_shape(ds, da, sc.width, sc.depth, true, count, rng)},
          {"classifier_sa", classifier_shape(ds, da, sc.width, sc.depth, false, count, rng)}};
      for (const auto& [name, t] : runs) {
        std::cerr << "  gradients " << env_name << ' ' << sc.label << ' ' << name << ": " << t.parameterizations
                  << " parameterizations, " << t.probes << " probes, " << t.skipped << " skipped, worst "
                  << num(t.worst) << '\n';
        ++shapes;
        params += t.parameterizations;
        probes += t.probes;
        skipped += t.skipped;
        worst = std::max(worst, t.worst);
        enough = enough && t.parameterizations >= 100 && t.probes >= 100;
      }
    }
  }
  Line l{"gradients", enough && worst <= 1e-4, ""};
  l.detail = std::to_string(shapes) + " network shapes, " + std::to_string(params) + " parameterizations, " +
             std::to_string(probes) + " probes (" + std::to_string(skipped) + " straddled a kink), max rel err " +
             num(worst);
  return l;
}

// ---------------------------------------------------------------- tabular

Line motivation() {
  auto t0 = std::chrono::steady_clock::now();
  const std::string dir = std::string(VGDF_DATA_DIR) + "/layouts";
  auto src = tabular::GridLayout::load(dir + "/source.txt"), tar = tabular::GridLayout::load(dir + "/target.txt");
  tabular::MotivationConfig cfg;
  auto runs = tabular::run_motivation(src, tar, cfg);
  double secs = seconds_since(t0);
  double vgdf = tabular::mean_success(runs, tabular::TabularMethod::Vgdf);
  double darc = tabular::mean_success(runs, tabular::TabularMethod::Darc);
  auto pairs = tabular::forward_mismatch_pairs(src, tar);
  auto mean_q = [&](tabular::TabularMethod m, const tabular::StateAction& p) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : runs)
      if (r.method == m) {
        s += r.q(p.state, p.action);
        ++n;
      }
    return s / n;
  };
  bool below = !pairs.empty();
  std::string qs;
  for (const auto& p : pairs) {
    double qd = mean_q(tabular::TabularMethod::Darc, p), qv = mean_q(tabular::TabularMethod::Vgdf, p);
    below = below && qd < qv;
    qs += " " + num(qd, 3) + "<" + num(qv, 3);
  }
  Line l{"motivation", vgdf >= 0.9 && darc <= 0.1 && below && secs < 600.0, ""};
  l.detail = "success vgdf " + num(vgdf) + " darc " + num(darc) + " over " + std::to_string(cfg.seeds.size()) +
             " seeds; darc<vgdf Q at " + std::to_string(pairs.size()) + " mismatch pairs:" + qs + "; " +
             num(secs, 3) + " s";
  return l;
}

// ---------------------------------------------------------------- ensemble

Line ensemble_soundness() {
  SeededRng rng(5);
  // s' = A s + B a + 0.05 eps, r = c.s + 0.05 eps.
  auto draw = [&](int n) {
    std::vector<Transition> out;
    for (int i = 0; i < n; ++i) {
      double s0 = rng.normal(), s1 = rng.normal(), a = rng.uniform(-1, 1);
      Transition t;
      t.state = {s0, s1};
      t.action = {a};
      t.next_state = {0.9 * s0 + 0.1 * s1 + 0.5 * a + 0.05 * rng.normal(),
                      -0.2 * s0 + 0.95 * s1 - 0.3 * a + 0.05 * rng.normal()};
      t.reward = 0.4 * s0 - 0.3 * s1 + 0.05 * rng.normal();
      out.push_back(t);
    }
    return out;
  };
  auto train = draw(20000), held = draw(2000);
  // Least-squares oracle on [s; a; 1].
  auto design = [](const std::vector<Transition>& d) {
    Eigen::MatrixXd x(4, static_cast<Eigen::Index>(d.size())), y(3, static_cast<Eigen::Index>(d.size()));
    for (std::size_t j = 0; j < d.size(); ++j) {
      const auto& t = d[j];
      auto c = static_cast<Eigen::Index>(j);
      x.col(c) << t.state[0], t.state[1], t.action[0], 1.0;
      y.col(c) << t.next_state[0] - t.state[0], t.next_state[1] - t.state[1], t.reward;
    }
    return std::pair{x, y};
  };
  auto [xt, yt] = design(train);
  Eigen::MatrixXd coef = (xt * xt.transpose()).ldlt().solve(xt * yt.transpose()).transpose();
  auto [xh, yh] = design(held);
  Eigen::MatrixXd oracle = coef * xh;

  dynamics::DynamicsEnsemble<float> ens(2, 1, dynamics::EnsembleConfig{5, 64, 3, 1e-3});
  ens.init(rng);
  for (const auto& t : train) ens.observe(t);
  auto held_batch = nn::make_batch<float>(held);
  std::vector<double> trace;
  auto mean_nll = [&] {
    double s = 0.0;
    for (double v : ens.evaluate_nll(held_batch)) s += v / ens.members();
    return s;
  };
  trace.push_back(mean_nll());
  const int steps = 8000;
  for (int step = 1; step <= steps; ++step) {
    std::vector<Transition> b;
    for (int i = 0; i < 256; ++i) b.push_back(train[rng.index(train.size())]);
    ens.train_step(nn::make_batch<float>(b), rng);
    if (step % 400 == 0) trace.push_back(mean_nll());
  }
  // Non-increasing against the best value so far, 5% of its magnitude allowed.
  bool monotone = true;
  double best = trace[0];
  for (double v : trace) {
    monotone = monotone && v <= best + 0.05 * std::abs(best);
    best = std::min(best, v);
  }
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, oracle.cols());
  double worst_member = 0.0;
  for (int m = 0; m < ens.members(); ++m) {
    Eigen::MatrixXd pm = ens.predict(m, held_batch.s, held_batch.a).mean.cast<double>();
    worst_member = std::max(worst_member, std::sqrt((pm - oracle).squaredNorm() / static_cast<double>(pm.size())));
    mean += pm / ens.members();
  }
  double rmse = std::sqrt((mean - oracle).squaredNorm() / static_cast<double>(mean.size()));
  Line l{"ensemble", rmse <= 1e-2 && monotone, ""};
  l.detail = "mean-prediction RMSE vs least squares " + num(rmse) + " (worst member " + num(worst_member) +
             "), held-out NLL " + num(trace.front()) + " -> " + num(trace.back()) + " over " +
             std::to_string(trace.size()) + " checkpoints" + (monotone ? "" : ", rose by more than 5%");
  return l;
}

// ---------------------------------------------------------------- runs

bench::ExperimentConfig desk(const std::string& file) {
  return bench::ExperimentConfig::load(std::string(VGDF_CONFIG_DIR) + "/" + file);
}

struct Group {
  bench::ExperimentConfig cfg;
  std::vector<bench::RunResult> runs;
  double mean() const {
    double s = 0.0;
    for (const auto& r : runs) s += r.final_return;
    return s / static_cast<double>(runs.size());
  }
  double sample_var() const {
    double m = mean(), s = 0.0;
    for (const auto& r : runs) s += (r.final_return - m) * (r.final_return - m);
    return s / static_cast<double>(runs.size() - 1);
  }
};

// Runs each distinct configuration once; criteria share them.
class Runs {
 public:
  explicit Runs(bool smoke) : smoke_(smoke) {}

  const Group& get(bench::ExperimentConfig cfg) {
    if (smoke_) shrink(cfg);
    const std::string key = hex64(cfg.hash());
    auto it = groups_.find(key);
    if (it != groups_.end()) return it->second;
    Group g{cfg, {}};
    for (auto seed : cfg.seed_list()) {
      g.runs.push_back(bench::run_seed(cfg, seed));
      const auto& r = g.runs.back();
      std::cerr << "  run " << cfg.method << ' ' << cfg.env << ' ' << cfg.shift << " gamma " << cfg.vgdf.gamma_ratio
                << " seed " << seed << ": final " << num(r.final_return) << " (" << num(r.seconds, 3) << " s)"
                << std::endl;
      std::ofstream log("acceptance_runs.csv", std::ios::app);
      log << cfg.method << ',' << cfg.env << ',' << cfg.shift << ',' << cfg.vgdf.gamma_ratio << ','
          << hex64(cfg.hash()) << ',' << seed << ',' << format_double(r.final_return) << ','
          << format_double(r.seconds) << '\n';
    }
    return groups_.emplace(key, std::move(g)).first->second;
  }

  bench::SelectionAudit audits() const {
    bench::SelectionAudit a;
    for (const auto& [key, g] : groups_)
      for (const auto& r : g.runs) {
        a.filtered_steps += r.audit.filtered_steps;
        a.count_mismatches += r.audit.count_mismatches;
        a.log_mask_mismatches += r.audit.log_mask_mismatches;
      }
    return a;
  }

  bool smoke() const { return smoke_; }

 private:
  static void shrink(bench::ExperimentConfig& c) {
    c.target_steps = 300;
    c.source_steps = 0;
    c.eval_every = 100;
    c.eval_episodes = 2;
    c.seeds = "0,1";
    c.dataset_size = 3000;
    c.dataset_policy_steps = 500;
    c.bc_steps = 300;
    c.vgdf.warm_start = std::min(c.vgdf.warm_start, 1000L);
    c.vgdf.random_steps = 500;
    c.vgdf.train_repeat = 2;
  }

  bool smoke_;
  std::map<std::string, Group> groups_;
};

bench::ExperimentConfig with(bench::ExperimentConfig c, const std::string& method, const std::string& shift = "") {
  c.method = method;
  if (!shift.empty()) c.shift = shift;
  return c;
}

std::string describe(const std::string& label, const Group& g) {
  return label + " " + num(g.mean()) + " +- " + num(std::sqrt(g.sample_var()), 3);
}

// ---------------------------------------------------------------- selection

double max_gap(const algo::Agent<double>& x, const algo::Agent<double>& y) {
  double gap = (x.pi.net().params() - y.pi.net().params()).cwiseAbs().maxCoeff();
  gap = std::max(gap, (x.pi_e.net().params() - y.pi_e.net().params()).cwiseAbs().maxCoeff());
  for (int i = 0; i < 2; ++i) {
    gap = std::max(gap, (x.critics.q(i).params() - y.critics.q(i).params()).cwiseAbs().maxCoeff());
    gap = std::max(gap, (x.critics.target(i) - y.critics.target(i)).cwiseAbs().maxCoeff());
  }
  return gap;
}

// Full VGDF update at xi = 100 against the Mix update on the same batches and
// the same random stream (the Mix side draws and discards the FVP scores).
double mix_equivalence_gap() {
  auto env = envs::make_env("point_mass");
  algo::VgdfConfig c;
  c.xi = 100.0;
  c.hidden_width = 32;
  c.ensemble_size = 3;
  c.ensemble_width = 32;
  c.ensemble_depth = 2;
  algo::Agent<double> x(env->state_dim(), env->action_dim(), c);
  SeededRng init(21);
  x.init(init);
  algo::Agent<double> y = x;
  SeededRng data(22), r1(23), r2(23);
  auto batch = [&] {
    std::vector<Transition> ts;
    for (int j = 0; j < 32; ++j) {
      Transition t;
      for (int i = 0; i < 4; ++i) t.state.push_back(data.normal());
      t.action = {data.uniform(-1, 1), data.uniform(-1, 1)};
      for (int i = 0; i < 4; ++i) t.next_state.push_back(t.state[static_cast<std::size_t>(i)] + 0.1 * data.normal());
      t.reward = data.uniform(0, 1);
      ts.push_back(t);
    }
    return nn::make_batch<double>(ts);
  };
  double gap = 0.0;
  for (int step = 0; step < 20; ++step) {
    auto bt = batch(), bs = batch();
    x.model.train_step(bt, r1);
    y.model.train_step(bt, r2);
    algo::vgdf_update(x, bt, bs, true, r1);
    algo::fvp_batch(bs.s, bs.a, bs.s2, y.model, y.pi, y.critics, r2, c.fve_mean_action, c.variance_floor);
    algo::source_weighted_critic_step(y.critics, y.critic_opt, bt, bs, algo::mix_weights(32), y.pi, c.lambda,
                                      c.discount, r2);
    algo::UpdateStats st;
    algo::actor_step(y, algo::union_states(bt, bs), r2, st, c.explore);
    gap = std::max(gap, max_gap(x, y));
  }
  return gap;
}

Line selection(Runs& runs) {
  // Dedicated short runs so the line stands alone; any longer runs already
  // made by this binary are audited as well.
  bench::ExperimentConfig a = desk("desk_point_mass.cfg");
  a.target_steps = 2000;
  a.vgdf.warm_start = 5000;
  a.seeds = "0";
  bench::ExperimentConfig b = desk("desk_pendulum.cfg");
  b.method = "vgdf_bc";
  b.target_steps = 300;
  b.dataset_size = 5000;
  b.dataset_policy_steps = 1000;
  b.seeds = "0";
  runs.get(a);
  runs.get(b);
  bench::SelectionAudit au = runs.audits();
  double gap = mix_equivalence_gap();
  Line l{"selection", au.filtered_steps > 0 && au.count_mismatches == 0 && au.log_mask_mismatches == 0 && gap <= 1e-12,
         ""};
  l.detail = std::to_string(au.filtered_steps) + " filtered steps, " + std::to_string(au.count_mismatches) +
             " count mismatches, " + std::to_string(au.log_mask_mismatches) +
             " mask changes under log; xi=100 vs Mix max parameter gap " + num(gap);
  return l;
}

// ---------------------------------------------------------------- experiments

Line no_shift(Runs& runs) {
  auto base = desk("desk_point_mass.cfg");
  const Group& v = runs.get(with(base, "vgdf", "none"));
  const Group& m = runs.get(with(base, "mix", "none"));
  double rel = std::abs(v.mean() - m.mean()) / std::abs(m.mean());
  Line l{"no_shift", rel <= 0.15, ""};
  l.detail = "point_mass none: " + describe("vgdf", v) + ", " + describe("mix", m) + ", relative gap " + num(rel, 3);
  return l;
}

Line shifted(Runs& runs) {
  bool ok = true;
  std::string detail;
  for (std::string file : {"desk_point_mass.cfg", "desk_pendulum.cfg"}) {
    auto base = desk(file);
    const Group& v = runs.get(with(base, "vgdf"));
    const Group& z = runs.get(with(base, "zero_shot"));
    ok = ok && v.mean() > z.mean();
    detail += base.env + " " + base.shift + ": " + describe("vgdf", v) + " vs " + describe("zero_shot", z) + "; ";
  }
  // Ratio sweep with the target budget fixed.
  auto base = desk("desk_point_mass.cfg");
  std::vector<const Group*> sweep;
  for (long g : {5L, 10L, 20L}) {
    auto c = with(base, "vgdf");
    c.vgdf.gamma_ratio = g;
    sweep.push_back(&runs.get(c));
  }
  double num_var = 0.0, dof = 0.0;
  for (const Group* g : sweep) {
    num_var += g->sample_var() * static_cast<double>(g->runs.size() - 1);
    dof += static_cast<double>(g->runs.size() - 1);
  }
  const double pooled = std::sqrt(num_var / dof);
  bool trend = true;
  for (std::size_t i = 1; i < sweep.size(); ++i) trend = trend && sweep[i]->mean() >= sweep[i - 1]->mean() - pooled;
  detail += "gamma sweep 5/10/20: " + num(sweep[0]->mean()) + " / " + num(sweep[1]->mean()) + " / " +
            num(sweep[2]->mean()) + ", pooled std " + num(pooled, 3);
  return Line{"shifted", ok && trend, detail};
}

Line fvp_ordering(Runs& runs) {
  auto base = desk("desk_point_mass.cfg");
  const Group& g = runs.get(with(base, "vgdf", "none"));
  const std::vector<std::string> shifts = {"none", "clamp_small", "clamp_large"};
  bench::QuantifyOptions q;
  if (runs.smoke()) {
    q.target_transitions = 500;
    q.train_steps = 100;
    q.log_every = 50;
  }
  std::vector<double> mean(shifts.size(), 0.0);
  for (const auto& r : g.runs) {
    q.seed = r.seed;
    auto traces = bench::quantify_shift(*r.agent, base.env, shifts, q);
    for (std::size_t i = 0; i < shifts.size(); ++i) mean[i] += traces[i].final_mean() / static_cast<double>(g.runs.size());
  }
  Line l{"fvp_ordering", mean[0] > mean[1] && mean[1] > mean[2], ""};
  l.detail = "point_mass checkpoints trained without shift, mean Lambda";
  for (std::size_t i = 0; i < shifts.size(); ++i) l.detail += (i ? " > " : " ") + shifts[i] + " " + num(mean[i]);
  return l;
}

// On the point mass the dataset heads for the goal the clamp makes
// unreachable, so cloning it fights adaptation; the pendulum is used.
Line vgdf_bc(Runs& runs) {
  auto base = desk("desk_pendulum.cfg");
  const Group& v = runs.get(with(base, "vgdf_bc"));
  const Group& b = runs.get(with(base, "bc_only"));
  Line l{"vgdf_bc", v.mean() > b.mean(), ""};
  l.detail = base.env + " " + base.shift + ", " + std::to_string(v.cfg.dataset_size) + "-transition dataset: " +
             describe("vgdf_bc", v) + " vs " + describe("bc_only", b);
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  keep_heap_warm();
  CLI::App app{"Acceptance suite"};
  std::vector<std::string> only;
  bool smoke = false;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_flag("--smoke", smoke, "tiny budgets for the training criteria; the verdicts are not meaningful");
  CLI11_PARSE(app, argc, argv);

  Runs runs(smoke);
  const std::vector<std::pair<std::string, std::function<Line()>>> criteria = {
      {"bounds", bound_audits},
      {"telescoping", telescoping},
      {"gradients", gradients},
      {"motivation", motivation},
      {"ensemble", ensemble_soundness},
      {"no_shift", [&] { return no_shift(runs); }},
      {"shifted", [&] { return shifted(runs); }},
      {"fvp_ordering", [&] { return fvp_ordering(runs); }},
      {"vgdf_bc", [&] { return vgdf_bc(runs); }},
      // Last, so it also audits every training run above.
      {"selection", [&] { return selection(runs); }},
  };
  for (const auto& name : only) {
    bool known = false;
    for (const auto& c : criteria) known = known || c.first == name;
    if (!known) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }
  }
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
      l = fn();
    } catch (const std::exception& e) {
      l = Line{name, false, std::string("error: ") + e.what()};
    }
    std::cout << (smoke ? "SMOKE " : "") << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail
              << (l.known_unattainable ? " [known unattainable as written]" : "") << " (" << num(seconds_since(t0), 3)
              << " s)" << std::endl;
    failures += !l.pass && !l.known_unattainable;
  }
  return failures == 0 ? 0 : 1;
}
