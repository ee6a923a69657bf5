#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vgdf/dynamics/ensemble.hpp"
#include "vgdf/nn/critic.hpp"
#include "vgdf/nn/policy.hpp"

namespace vgdf::algo {

using nn::Mat;
using nn::RowVec;

inline constexpr double kVarianceFloor = 1e-6;

// Fictitious values of a batch: values(i, j) = min_k Q_k(s'_ij, a'_ij) with
// s'_ij drawn from member i for source pair j and a'_ij ~ pi(.|s'_ij).
template <typename Scalar>
struct FictitiousValueEnsemble {
  Mat<Scalar> values;  // members x batch
  int members() const { return static_cast<int>(values.rows()); }
};

struct FvpEstimate {
  double mean = 0.0;
  double variance = kVarianceFloor;  // floored
  double source_value = 0.0;
  double likelihood = 0.0;
  double log_likelihood = 0.0;
};

// Policy action for a batch: a sample, or the squashed mean.
template <typename Scalar>
Mat<Scalar> policy_actions(const nn::GaussianPolicy<Scalar>& pi, const Mat<Scalar>& states, SeededRng& rng,
                           bool mean_action) {
  if (mean_action) return pi.mean_action(states);
  return pi.sample(states, rng).action;
}

template <typename Scalar>
FictitiousValueEnsemble<Scalar> build_fve(const Mat<Scalar>& s, const Mat<Scalar>& a,
                                          const dynamics::DynamicsEnsemble<Scalar>& model,
                                          const nn::GaussianPolicy<Scalar>& pi, const nn::CriticPair<Scalar>& critics,
                                          SeededRng& rng, bool mean_action = false, bool mean_next_state = false) {
  const Eigen::Index n = s.cols();
  const int m = model.members();
  auto draws = model.sample_fictitious(s, a, rng, mean_next_state);
  // One policy/critic pass over all members' fictitious states.
  Mat<Scalar> next(s.rows(), n * m);
  for (int i = 0; i < m; ++i) next.middleCols(i * n, n) = draws[static_cast<std::size_t>(i)].next_state;
  Mat<Scalar> act = policy_actions(pi, next, rng, mean_action);
  RowVec<Scalar> q = critics.min_value(next, act);
  FictitiousValueEnsemble<Scalar> fve;
  fve.values.resize(m, n);
  for (int i = 0; i < m; ++i) fve.values.row(i) = q.segment(i * n, n);
  return fve;
}

// Gaussian log-density of x under N(mean, variance).
inline double gaussian_log_density(double x, double mean, double variance) {
  double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * variance) - d * d / (2.0 * variance);
}

// Likelihood of one source value under the ensemble's statistics; the
// variance is the population variance of the members, floored.
inline FvpEstimate fvp_from_values(const double* values, int members, double source_value,
                                   double variance_floor = kVarianceFloor) {
  if (members <= 0) throw std::invalid_argument("fictitious value ensemble is empty");
  double mean = 0.0;
  for (int i = 0; i < members; ++i) mean += values[i];
  mean /= members;
  double var = 0.0;
  for (int i = 0; i < members; ++i) var += (values[i] - mean) * (values[i] - mean);
  var /= members;
  FvpEstimate e;
  e.mean = mean;
  e.variance = std::max(var, variance_floor);
  e.source_value = source_value;
  e.log_likelihood = gaussian_log_density(source_value, e.mean, e.variance);
  e.likelihood = std::exp(e.log_likelihood);
  return e;
}

// FVP for every column of a source batch (s, a, s'_src).
template <typename Scalar>
std::vector<FvpEstimate> fvp(const Mat<Scalar>& s_next_src, const FictitiousValueEnsemble<Scalar>& fve,
                             const nn::GaussianPolicy<Scalar>& pi, const nn::CriticPair<Scalar>& critics,
                             SeededRng& rng, bool mean_action = false, double variance_floor = kVarianceFloor) {
  const Eigen::Index n = s_next_src.cols();
  if (fve.values.cols() != n) throw std::invalid_argument("fictitious values and source batch differ in size");
  Mat<Scalar> act = policy_actions(pi, s_next_src, rng, mean_action);
  RowVec<Scalar> v_src = critics.min_value(s_next_src, act);
  std::vector<FvpEstimate> out(static_cast<std::size_t>(n));
  std::vector<double> col(static_cast<std::size_t>(fve.members()));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < fve.members(); ++i) col[static_cast<std::size_t>(i)] = static_cast<double>(fve.values(i, j));
    out[static_cast<std::size_t>(j)] =
        fvp_from_values(col.data(), fve.members(), static_cast<double>(v_src(j)), variance_floor);
  }
  return out;
}

template <typename Scalar>
std::vector<FvpEstimate> fvp_batch(const Mat<Scalar>& s, const Mat<Scalar>& a, const Mat<Scalar>& s_next_src,
                                   const dynamics::DynamicsEnsemble<Scalar>& model,
                                   const nn::GaussianPolicy<Scalar>& pi, const nn::CriticPair<Scalar>& critics,
                                   SeededRng& rng, bool mean_action = false,
                                   double variance_floor = kVarianceFloor) {
  auto fve = build_fve(s, a, model, pi, critics, rng, mean_action);
  return fvp(s_next_src, fve, pi, critics, rng, mean_action, variance_floor);
}

inline std::vector<double> likelihoods(const std::vector<FvpEstimate>& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& e : batch) out.push_back(e.likelihood);
  return out;
}

inline std::vector<double> log_likelihoods(const std::vector<FvpEstimate>& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& e : batch) out.push_back(e.log_likelihood);
  return out;
}

inline double fvp_batch_mean(const std::vector<FvpEstimate>& batch) {
  if (batch.empty()) throw std::invalid_argument("fvp_batch_mean needs a nonempty batch");
  double acc = 0.0;
  for (const auto& e : batch) acc += e.likelihood;
  return acc / static_cast<double>(batch.size());
}

inline double fvp_batch_log_mean(const std::vector<FvpEstimate>& batch) {
  if (batch.empty()) throw std::invalid_argument("fvp_batch_log_mean needs a nonempty batch");
  double acc = 0.0;
  for (const auto& e : batch) acc += e.log_likelihood;
  return acc / static_cast<double>(batch.size());
}

struct SelectionMask {
  std::vector<char> flags;
  double threshold = 0.0;  // score of the lowest selected element
  long selected_count = 0;
};

inline long selection_count(std::size_t batch, double xi) {
  return std::max(1L, static_cast<long>(static_cast<double>(batch) * xi / 100.0));
}

// Flags the `count` highest scores; ties go to the lower batch index.
inline SelectionMask select_top(const std::vector<double>& scores, long count) {
  if (scores.empty()) throw std::invalid_argument("selection needs a nonempty batch");
  count = std::clamp(count, 1L, static_cast<long>(scores.size()));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  SelectionMask mask;
  mask.flags.assign(scores.size(), 0);
  for (long k = 0; k < count; ++k) mask.flags[order[static_cast<std::size_t>(k)]] = 1;
  mask.threshold = scores[order[static_cast<std::size_t>(count - 1)]];
  mask.selected_count = count;
  return mask;
}

// Top xi% of the batch by score (likelihood, log-likelihood, or any
// increasing transform of them).
inline SelectionMask select(const std::vector<double>& scores, double xi) {
  if (!(xi > 0.0 && xi <= 100.0)) throw std::invalid_argument("xi must lie in (0, 100]");
  return select_top(scores, selection_count(scores.size(), xi));
}

inline SelectionMask select(const std::vector<FvpEstimate>& batch, double xi) {
  return select(log_likelihoods(batch), xi);
}

inline SelectionMask select_all(std::size_t n) {
  SelectionMask mask;
  mask.flags.assign(n, 1);
  mask.selected_count = static_cast<long>(n);
  return mask;
}

}  // namespace vgdf::algo
