#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vgdf/core/replay_buffer.hpp"
#include "vgdf/tabular/grid.hpp"
#include "vgdf/tabular/q_learning.hpp"

namespace vgdf::tabular {

enum class TabularMethod { QLearningTarget, Darc, Vgdf };

inline const char* to_string(TabularMethod m) {
  switch (m) {
    case TabularMethod::QLearningTarget: return "q_learning_target";
    case TabularMethod::Darc: return "darc";
    case TabularMethod::Vgdf: return "vgdf";
  }
  return "?";
}

struct MotivationConfig {
  std::size_t source_steps = 500'000;
  std::size_t target_steps = 50'000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t eval_episodes = 100;
  std::size_t max_episode_len = 256;
  std::size_t batch = 32;
  double xi_percent = 25.0;
  double learning_rate = 0.1;
  double discount = 0.9;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  // Source steps before filtering / reward correction switch on.
  std::size_t warm_start_source_steps = 50'000;
  double smoothing = 1e-3;
  double darc_clip = 10.0;
};

struct TabularRun {
  TabularMethod method = TabularMethod::Vgdf;
  std::uint64_t seed = 0;
  double success_rate = 0.0;
  double accepted_fraction = 1.0;  // of scored source transitions
  QTable q;
  std::vector<double> source_visits;
  std::vector<double> target_visits;
};

struct StateAction {
  std::size_t state = 0;
  std::size_t action = 0;
};

// State-actions whose successor differs between the layouts, restricted to
// moves that head away from the start (the approach side of a doorway).
inline std::vector<StateAction> forward_mismatch_pairs(const GridLayout& src, const GridLayout& tar) {
  if (!src.same_shape(tar)) throw std::invalid_argument("layouts differ in size, start or goal");
  auto distances = [](const GridLayout& g) {
    std::vector<int> d(g.n_cells(), -1);
    std::deque<Cell> q{g.start};
    d[g.index(g.start)] = 0;
    while (!q.empty()) {
      Cell c = q.front();
      q.pop_front();
      for (std::size_t a = 0; a < kGridActions; ++a) {
        Cell n = g.step(c, static_cast<GridAction>(a));
        if (d[g.index(n)] < 0) {
          d[g.index(n)] = d[g.index(c)] + 1;
          q.push_back(n);
        }
      }
    }
    return d;
  };
  auto ds = distances(src), dt = distances(tar);
  std::vector<StateAction> out;
  for (std::size_t s = 0; s < src.n_cells(); ++s) {
    Cell c = src.cell(s);
    if (src.is_wall(c) || tar.is_wall(c)) continue;
    for (std::size_t a = 0; a < kGridActions; ++a) {
      Cell ns = src.step(c, static_cast<GridAction>(a)), nt = tar.step(c, static_cast<GridAction>(a));
      if (ns == nt) continue;
      bool forward = (ds[src.index(ns)] > ds[s]) || (dt[tar.index(nt)] > dt[s]);
      if (forward) out.push_back({s, a});
    }
  }
  return out;
}

namespace detail {

struct Walker {
  GridEnv env;
  std::size_t state;
  explicit Walker(const GridLayout& g, std::size_t cap) : env(g, cap), state(env.reset()) {}

  Transition act(const QTable& q, double eps, SeededRng& rng, Domain domain, std::vector<double>& visits) {
    std::size_t a = q.epsilon_greedy(state, eps, rng);
    GridStep st = env.step(a);
    Transition t = Transition::discrete(state, a, st.reward, st.state, st.terminal, domain);
    visits[st.state] += 1.0;
    state = (st.terminal || st.truncated) ? env.reset() : st.state;
    return t;
  }
};

}  // namespace detail

inline double greedy_success_rate(const QTable& q, const GridLayout& layout, std::size_t episodes, std::size_t cap,
                                  SeededRng& rng) {
  GridEnv env(layout, cap);
  std::size_t wins = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = env.reset();
    for (;;) {
      GridStep st = env.step(q.greedy(s, rng));
      s = st.state;
      if (st.terminal) {
        ++wins;
        break;
      }
      if (st.truncated) break;
    }
  }
  return static_cast<double>(wins) / static_cast<double>(episodes);
}

inline TabularRun train_tabular(TabularMethod method, const GridLayout& source, const GridLayout& target,
                                const MotivationConfig& cfg, std::uint64_t seed) {
  if (!source.same_shape(target)) throw std::invalid_argument("layouts differ in size, start or goal");
  SeededRng rng(seed);
  const std::size_t n = target.n_cells();
  TabularRun run;
  run.method = method;
  run.seed = seed;
  run.q = QTable(n, kGridActions, cfg.learning_rate, cfg.discount);
  run.source_visits.assign(n, 0.0);
  run.target_visits.assign(n, 0.0);
  CountModel model_src(n, kGridActions, cfg.smoothing), model_tar(n, kGridActions, cfg.smoothing);
  ReplayBuffer buf_src(cfg.source_steps + 1), buf_tar(cfg.target_steps + 1);
  detail::Walker walk_src(source, cfg.max_episode_len), walk_tar(target, cfg.max_episode_len);
  run.source_visits[walk_src.state] += 1.0;
  run.target_visits[walk_tar.state] += 1.0;

  const bool uses_source = method != TabularMethod::QLearningTarget;
  const std::size_t ratio = cfg.target_steps ? cfg.source_steps / cfg.target_steps : 0;
  std::size_t source_seen = 0;
  double scored = 0.0, accepted = 0.0;
  for (std::size_t step = 0; step < cfg.target_steps; ++step) {
    double progress = static_cast<double>(step) / static_cast<double>(cfg.target_steps);
    double eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * progress;
    if (uses_source) {
      for (std::size_t k = 0; k < ratio; ++k) {
        Transition t = walk_src.act(run.q, eps, rng, Domain::Source, run.source_visits);
        model_src.add(t);
        buf_src.push(std::move(t));
        ++source_seen;
      }
    }
    Transition t = walk_tar.act(run.q, eps, rng, Domain::Target, run.target_visits);
    model_tar.add(t);
    buf_tar.push(std::move(t));

    const bool warm = source_seen < cfg.warm_start_source_steps;
    switch (method) {
      case TabularMethod::QLearningTarget:
        for (const auto& x : buf_tar.sample(cfg.batch, rng)) q_update(run.q, x);
        break;
      case TabularMethod::Darc:
        for (const auto& x : buf_src.sample(cfg.batch, rng))
          q_update(run.q, x, warm ? x.reward : darc_tabular_reward(x, model_tar, model_src, cfg.darc_clip));
        break;
      case TabularMethod::Vgdf: {
        for (const auto& x : buf_tar.sample(cfg.batch, rng)) q_update(run.q, x);
        auto batch = buf_src.sample(cfg.batch, rng);
        auto mask = tabular_vgdf_filter(batch, run.q, model_tar, cfg.xi_percent, warm);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          if (!mask[i]) continue;
          q_update(run.q, batch[i]);
          if (!warm) accepted += 1.0;
        }
        if (!warm) scored += static_cast<double>(batch.size());
        break;
      }
    }
  }
  run.accepted_fraction = scored > 0.0 ? accepted / scored : 1.0;
  SeededRng eval_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  run.success_rate = greedy_success_rate(run.q, target, cfg.eval_episodes, cfg.max_episode_len, eval_rng);
  return run;
}

inline std::vector<TabularRun> run_motivation(const GridLayout& source, const GridLayout& target,
                                              const MotivationConfig& cfg) {
  std::vector<TabularRun> runs;
  for (TabularMethod m : {TabularMethod::QLearningTarget, TabularMethod::Darc, TabularMethod::Vgdf})
    for (std::uint64_t seed : cfg.seeds) runs.push_back(train_tabular(m, source, target, cfg, seed));
  return runs;
}

inline double mean_success(const std::vector<TabularRun>& runs, TabularMethod m) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs)
    if (r.method == m) {
      sum += r.success_rate;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline void write_grid_csv(const std::string& path, const GridLayout& g, const std::vector<double>& cells) {
  std::ofstream out(path);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) out << (x ? "," : "") << cells[g.index({x, y})];
    out << '\n';
  }
}

inline void write_qtable_csv(const std::string& path, const GridLayout& g, const QTable& q) {
  std::ofstream out(path);
  out.precision(10);
  out << "x,y,up,down,left,right\n";
  for (std::size_t s = 0; s < g.n_cells(); ++s) {
    if (g.is_wall(g.cell(s))) continue;
    out << g.cell(s).x << ',' << g.cell(s).y;
    for (std::size_t a = 0; a < kGridActions; ++a) out << ',' << q(s, a);
    out << '\n';
  }
}

// success.csv, per-method visitation heatmaps summed over seeds, per-run Q tables.
inline void write_motivation(const std::string& dir, const GridLayout& target, const std::vector<TabularRun>& runs) {
  std::filesystem::create_directories(dir);
  std::ofstream success(dir + "/success.csv");
  success << "seed,method,success_rate\n";
  std::map<std::string, std::vector<double>> heat;
  for (const auto& r : runs) {
    std::string m = to_string(r.method);
    success << r.seed << ',' << m << ',' << r.success_rate << '\n';
    auto& hs = heat["heatmap_" + m + "_source"];
    auto& ht = heat["heatmap_" + m + "_target"];
    hs.resize(r.source_visits.size(), 0.0);
    ht.resize(r.target_visits.size(), 0.0);
    for (std::size_t i = 0; i < hs.size(); ++i) {
      hs[i] += r.source_visits[i];
      ht[i] += r.target_visits[i];
    }
    write_qtable_csv(dir + "/qtable_" + m + "_seed" + std::to_string(r.seed) + ".csv", target, r.q);
  }
  for (const auto& [name, cells] : heat) write_grid_csv(dir + "/" + name + ".csv", target, cells);
}

}  // namespace vgdf::tabular
