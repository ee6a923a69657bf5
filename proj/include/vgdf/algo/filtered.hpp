#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/algo/fvp.hpp"
#include "vgdf/nn/sac.hpp"

namespace vgdf::algo {

using nn::Batch;
using nn::CriticLoss;

// Soft TD step on a batch whose first n_target columns are target-domain data.
template <typename Scalar>
CriticLoss td_step(nn::CriticPair<Scalar>& critics, nn::Adam<Scalar> opt[2], const Batch<Scalar>& b,
                   const RowVec<Scalar>& w, Eigen::Index n_target, const nn::GaussianPolicy<Scalar>& pi,
                   double lambda, double gamma, SeededRng& rng) {
  RowVec<Scalar> y = nn::critic_target(b, critics, pi, static_cast<Scalar>(lambda), static_cast<Scalar>(gamma), rng);
  return nn::weighted_critic_step(critics, opt, b, y, w, n_target);
}

// Target columns at weight 1/(2B) plus the source columns with a nonzero
// weight; zero-weight source columns are left out of the pass entirely.
template <typename Scalar>
CriticLoss source_weighted_critic_step(nn::CriticPair<Scalar>& critics, nn::Adam<Scalar> opt[2],
                                       const Batch<Scalar>& b_tar, const Batch<Scalar>& b_src,
                                       const std::vector<double>& source_weights, const nn::GaussianPolicy<Scalar>& pi,
                                       double lambda, double gamma, SeededRng& rng) {
  if (static_cast<Eigen::Index>(source_weights.size()) != b_src.size())
    throw std::invalid_argument("source weights do not match the source batch");
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < source_weights.size(); ++j)
    if (source_weights[j] != 0.0) keep.push_back(static_cast<Eigen::Index>(j));
  const Eigen::Index nt = b_tar.size();
  const auto ns = static_cast<Eigen::Index>(keep.size());
  Batch<Scalar> b = ns > 0 ? nn::concat(b_tar, nn::take_columns(b_src, keep)) : b_tar;
  RowVec<Scalar> w(nt + ns);
  w.head(nt).setConstant(static_cast<Scalar>(1.0 / (2.0 * static_cast<double>(nt))));
  for (Eigen::Index k = 0; k < ns; ++k)
    w(nt + k) = static_cast<Scalar>(source_weights[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])]);
  return td_step(critics, opt, b, w, nt, pi, lambda, gamma, rng);
}

// Per-sample source weight 1/floor(2 B xi%) on selected transitions.
inline std::vector<double> filtered_weights(const SelectionMask& mask, std::size_t batch, double xi) {
  const long denom = static_cast<long>(std::floor(2.0 * static_cast<double>(batch) * xi / 100.0));
  if (denom <= 0)
    throw std::invalid_argument("floor(2 B xi%) = 0 (B=" + std::to_string(batch) + ", xi=" + std::to_string(xi) +
                                "); increase the batch size or the selection ratio");
  if (mask.flags.size() != batch) throw std::invalid_argument("mask does not match the source batch");
  std::vector<double> w(batch, 0.0);
  for (std::size_t j = 0; j < batch; ++j)
    if (mask.flags[j]) w[j] = 1.0 / static_cast<double>(denom);
  return w;
}

// Unfiltered sharing: every source transition at 1/(2B).
inline std::vector<double> mix_weights(std::size_t batch) {
  return std::vector<double>(batch, 1.0 / (2.0 * static_cast<double>(batch)));
}

template <typename Scalar>
CriticLoss filtered_critic_step(nn::CriticPair<Scalar>& critics, nn::Adam<Scalar> opt[2], const Batch<Scalar>& b_tar,
                                const Batch<Scalar>& b_src, const SelectionMask& mask, double xi,
                                const nn::GaussianPolicy<Scalar>& pi, double lambda, double gamma, SeededRng& rng) {
  if (b_tar.size() != b_src.size()) throw std::invalid_argument("target and source batches must have equal size");
  auto w = filtered_weights(mask, static_cast<std::size_t>(b_src.size()), xi);
  return source_weighted_critic_step(critics, opt, b_tar, b_src, w, pi, lambda, gamma, rng);
}

template <typename Scalar>
CriticLoss mix_critic_step(nn::CriticPair<Scalar>& critics, nn::Adam<Scalar> opt[2], const Batch<Scalar>& b_tar,
                           const Batch<Scalar>& b_src, const nn::GaussianPolicy<Scalar>& pi, double lambda,
                           double gamma, SeededRng& rng) {
  return source_weighted_critic_step(critics, opt, b_tar, b_src, mix_weights(static_cast<std::size_t>(b_src.size())),
                                     pi, lambda, gamma, rng);
}

}  // namespace vgdf::algo
