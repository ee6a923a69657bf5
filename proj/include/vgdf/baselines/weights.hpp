#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vgdf/algo/fvp.hpp"
#include "vgdf/baselines/classifier.hpp"

namespace vgdf::baselines {

// Per-sample source weights w / (2B), w = exp(Delta r) = estimated P_tar/P_src, clipped.
inline std::vector<double> iw_clip_weights(const std::vector<double>& delta_r) {
  std::vector<double> w(delta_r.size());
  const double scale = 1.0 / (2.0 * static_cast<double>(delta_r.size()));
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = clip_weight(std::exp(delta_r[j])) * scale;
  return w;
}

// Lambda normalized by the batch sum; sums to 1 over the source batch.
inline std::vector<double> fvp_iw_weights(const std::vector<algo::FvpEstimate>& batch) {
  if (batch.empty()) throw std::invalid_argument("fvp weights need a nonempty batch");
  // Normalize in log space so tiny densities do not all underflow to zero.
  double top = batch[0].log_likelihood;
  for (const auto& e : batch) top = std::max(top, e.log_likelihood);
  std::vector<double> w(batch.size());
  double total = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) total += w[j] = std::exp(batch[j].log_likelihood - top);
  for (double& v : w) v /= total;
  return w;
}

// Shares the xi% of source pairs with the highest min-Q(s, a).
inline algo::SelectionMask value_filter_mask(const std::vector<double>& q_values, double xi) {
  return algo::select(q_values, xi);
}

// Shares the xi% of source pairs with the smallest estimated dynamics gap;
// the gap score is -Delta r, so ranking by Delta r from the top is equivalent.
inline std::vector<double> dgdf_discrepancy(const std::vector<double>& delta_r) {
  std::vector<double> d(delta_r.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = -delta_r[j];
  return d;
}

inline algo::SelectionMask dgdf_mask(const std::vector<double>& discrepancy, double xi) {
  std::vector<double> neg(discrepancy.size());
  for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = -discrepancy[j];
  return algo::select(neg, xi);
}

}  // namespace vgdf::baselines
