#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vgdf/core/rng.hpp"
#include "vgdf/core/transition.hpp"

namespace vgdf::tabular {

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions, double learning_rate = 0.1, double discount = 0.9)
      : n_states_(states), n_actions_(actions), values_(states * actions, 0.0), lr_(learning_rate), gamma_(discount) {}

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double learning_rate() const { return lr_; }
  double discount() const { return gamma_; }
  const std::vector<double>& values() const { return values_; }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * n_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * n_actions_ + a]; }

  double max_value(std::size_t s) const {
    const double* row = &values_[s * n_actions_];
    return *std::max_element(row, row + n_actions_);
  }

  std::vector<double> state_values() const {
    std::vector<double> v(n_states_);
    for (std::size_t s = 0; s < n_states_; ++s) v[s] = max_value(s);
    return v;
  }

  // Greedy action with uniform tie-breaking among exact maxima.
  std::size_t greedy(std::size_t s, SeededRng& rng) const {
    double best = max_value(s);
    std::size_t ties[16];
    std::size_t n = 0;
    for (std::size_t a = 0; a < n_actions_ && n < 16; ++a)
      if ((*this)(s, a) == best) ties[n++] = a;
    return n == 1 ? ties[0] : ties[rng.index(n)];
  }

  std::size_t epsilon_greedy(std::size_t s, double epsilon, SeededRng& rng) const {
    if (rng.uniform() < epsilon) return rng.index(n_actions_);
    return greedy(s, rng);
  }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
  double lr_ = 0.1;
  double gamma_ = 0.9;
};

// One-step Q-learning on a discrete transition; `reward` overrides t.reward.
inline void q_update(QTable& q, const Transition& t, double reward) {
  std::size_t s = t.state_index(), a = t.action_index(), s2 = t.next_state_index();
  if (s >= q.n_states() || s2 >= q.n_states() || a >= q.n_actions())
    throw std::invalid_argument("transition index out of Q-table range");
  double bootstrap = t.terminal ? 0.0 : q.max_value(s2);
  double target = reward + q.discount() * bootstrap;
  q(s, a) += q.learning_rate() * (target - q(s, a));
}

inline void q_update(QTable& q, const Transition& t) { q_update(q, t, t.reward); }

// Smoothed empirical dynamics (N(s,a,s') + delta) / (N(s,a) + delta * |S|).
class CountModel {
 public:
  CountModel() = default;
  CountModel(std::size_t states, std::size_t actions, double delta = 1e-3)
      : n_states_(states), n_actions_(actions), delta_(delta), counts_(states * actions * states, 0.0),
        totals_(states * actions, 0.0) {
    if (delta <= 0.0) throw std::invalid_argument("count model smoothing must be positive");
  }

  std::size_t n_states() const { return n_states_; }
  double delta() const { return delta_; }

  void add(const Transition& t) { add(t.state_index(), t.action_index(), t.next_state_index()); }
  void add(std::size_t s, std::size_t a, std::size_t s2) {
    if (s >= n_states_ || a >= n_actions_ || s2 >= n_states_) throw std::invalid_argument("count index out of range");
    counts_[(s * n_actions_ + a) * n_states_ + s2] += 1.0;
    totals_[s * n_actions_ + a] += 1.0;
    ++total_;
  }

  double visits(std::size_t s, std::size_t a) const { return totals_[s * n_actions_ + a]; }
  double count(std::size_t s, std::size_t a, std::size_t s2) const { return counts_[(s * n_actions_ + a) * n_states_ + s2]; }
  std::size_t total() const { return total_; }

  double prob(std::size_t s, std::size_t a, std::size_t s2) const {
    return (count(s, a, s2) + delta_) / (visits(s, a) + delta_ * static_cast<double>(n_states_));
  }

  // E_{s' ~ model(.|s,a)} V(s').
  double expected_value(std::size_t s, std::size_t a, const std::vector<double>& v) const {
    const double* row = &counts_[(s * n_actions_ + a) * n_states_];
    double weighted = 0.0, sum_v = 0.0;
    for (std::size_t k = 0; k < n_states_; ++k) {
      weighted += row[k] * v[k];
      sum_v += v[k];
    }
    return (weighted + delta_ * sum_v) / (visits(s, a) + delta_ * static_cast<double>(n_states_));
  }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  double delta_ = 1e-3;
  std::vector<double> counts_;
  std::vector<double> totals_;
  std::size_t total_ = 0;
};

// |V(s'_src) - E_model V(s')| with V = max_a Q. Pairs the model has never
// seen get +inf, so they rank behind every scored transition.
inline double value_difference(const Transition& t, const std::vector<double>& v, const CountModel& model) {
  std::size_t s = t.state_index(), a = t.action_index();
  if (model.visits(s, a) == 0.0) return std::numeric_limits<double>::infinity();
  double v_src = t.terminal ? 0.0 : v[t.next_state_index()];
  return std::abs(v_src - model.expected_value(s, a, v));
}

inline std::size_t selection_count(std::size_t batch, double xi_percent) {
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(batch) * xi_percent / 100.0));
  return std::max<std::size_t>(1, std::min(k, batch));
}

// Mask keeping the lowest xi% of `diffs`; ties resolved by batch position.
inline std::vector<bool> select_lowest(const std::vector<double>& diffs, double xi_percent) {
  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return diffs[i] < diffs[j]; });
  std::vector<bool> mask(diffs.size(), false);
  if (diffs.empty()) return mask;
  std::size_t k = selection_count(diffs.size(), xi_percent);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return mask;
}

// Accept mask for a source batch. Without target data (warm-start) every
// transition is accepted.
inline std::vector<bool> tabular_vgdf_filter(const std::vector<Transition>& batch, const QTable& q,
                                             const CountModel& model, double xi_percent, bool warm_start,
                                             std::vector<double>* diffs_out = nullptr) {
  if (warm_start || model.total() == 0) return std::vector<bool>(batch.size(), true);
  std::vector<double> v = q.state_values();
  std::vector<double> diffs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) diffs[i] = value_difference(batch[i], v, model);
  if (diffs_out) *diffs_out = diffs;
  return select_lowest(diffs, xi_percent);
}

// Reward correction clip(log P_tar - log P_src, -clip, 0) from smoothed counts.
inline double darc_correction(const Transition& t, const CountModel& model_tar, const CountModel& model_src,
                              double clip = 10.0) {
  std::size_t s = t.state_index(), a = t.action_index(), s2 = t.next_state_index();
  double dr = std::log(model_tar.prob(s, a, s2)) - std::log(model_src.prob(s, a, s2));
  return std::clamp(dr, -clip, 0.0);
}

inline double darc_tabular_reward(const Transition& t, const CountModel& model_tar, const CountModel& model_src,
                                  double clip = 10.0) {
  return t.reward + darc_correction(t, model_tar, model_src, clip);
}

}  // namespace vgdf::tabular
