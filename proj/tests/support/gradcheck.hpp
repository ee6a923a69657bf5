#pragma once

// Central finite-difference oracle for network gradients (double precision).

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vgdf/nn/mlp.hpp"

namespace vgdf::testing {

using nn::Mat;
using nn::Vec;

inline double relative_error(double analytic, double numeric) {
  double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

// Signs of every ReLU pre-activation; a finite-difference probe is only valid
// if the pattern is the same at both ends.
inline std::vector<bool> relu_pattern(const nn::Mlp<double>& net, const Vec<double>& p, const Mat<double>& x) {
  nn::MlpCache<double> cache;
  net.forward(p, x, &cache);
  std::vector<bool> out;
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
    for (Eigen::Index i = 0; i < cache.pre[l].size(); ++i) out.push_back(cache.pre[l].data()[i] > 0.0);
  return out;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;  // probes straddling a ReLU kink
};

// Compares grad against central differences of loss(params) for the listed
// coordinates plus one random direction. `pattern` (optional) returns the
// kink pattern at given params.
inline GradCheckResult check_gradient(const std::function<double(const Vec<double>&)>& loss, const Vec<double>& params,
                                      const Vec<double>& grad, const std::vector<Eigen::Index>& coords,
                                      const Vec<double>& direction, double h = 1e-5,
                                      const std::function<std::vector<bool>(const Vec<double>&)>& pattern = {}) {
  GradCheckResult res;
  auto probe = [&](const Vec<double>& d, double analytic) {
    Vec<double> plus = params + h * d, minus = params - h * d;
    if (pattern && pattern(plus) != pattern(minus)) {
      ++res.skipped;
      return;
    }
    double numeric = (loss(plus) - loss(minus)) / (2.0 * h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric));
    ++res.probes;
  };
  for (Eigen::Index c : coords) {
    Vec<double> e = Vec<double>::Zero(params.size());
    e(c) = 1.0;
    probe(e, grad(c));
  }
  if (direction.size() == params.size()) probe(direction, grad.dot(direction));
  return res;
}

}  // namespace vgdf::testing
