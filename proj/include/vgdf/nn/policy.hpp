#pragma once

#include <cmath>

#include "vgdf/nn/mlp.hpp"

namespace vgdf::nn {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Everything a reparameterized draw needs for its backward pass.
template <typename Scalar>
struct PolicySample {
  Mat<Scalar> action;     // tanh(u), in (-1, 1)
  RowVec<Scalar> logp;    // log pi(a|s)
  Mat<Scalar> mean;       // pre-squash mean
  Mat<Scalar> log_std;    // clamped
  Mat<Scalar> noise;      // standard normal eps
  Mat<Scalar> raw_log_std;
  MlpCache<Scalar> cache;
};

// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|.
template <typename Scalar>
Scalar log_one_minus_tanh_sq(Scalar u) {
  Scalar x = Scalar(-2) * u;
  Scalar softplus = std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
  return Scalar(2) * (static_cast<Scalar>(std::log(2.0)) - u - softplus);
}

// Tanh-squashed diagonal Gaussian. The network emits [mean; log_std].
template <typename Scalar>
class GaussianPolicy {
 public:
  using MatS = Mat<Scalar>;

  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, int width, int depth)
      : action_dim_(action_dim), net_(Mlp<Scalar>::make(state_dim, 2 * action_dim, width, depth, Activation::Relu)) {}
  explicit GaussianPolicy(Mlp<Scalar> net) : action_dim_(net.output_dim() / 2), net_(std::move(net)) {}

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return action_dim_; }
  Mlp<Scalar>& net() { return net_; }
  const Mlp<Scalar>& net() const { return net_; }
  void init(SeededRng& rng) { net_.init(rng); }

  MatS noise(Eigen::Index batch, SeededRng& rng) const {
    MatS eps(action_dim_, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      for (int i = 0; i < action_dim_; ++i) eps(i, j) = static_cast<Scalar>(rng.normal());
    return eps;
  }

  PolicySample<Scalar> sample(const MatS& states, SeededRng& rng) const {
    return sample(states, noise(states.cols(), rng));
  }

  PolicySample<Scalar> sample(const MatS& states, const MatS& eps) const {
    PolicySample<Scalar> out;
    MatS y = net_.forward(states, out.cache);
    out.mean = y.topRows(action_dim_);
    out.raw_log_std = y.bottomRows(action_dim_);
    out.log_std = out.raw_log_std.cwiseMax(Scalar(kLogStdMin)).cwiseMin(Scalar(kLogStdMax));
    out.noise = eps;
    MatS u = out.mean + (out.log_std.array().exp() * eps.array()).matrix();
    out.action = u.array().tanh().matrix();
    const Scalar half_log_2pi = static_cast<Scalar>(0.5 * std::log(2.0 * M_PI));
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), evaluated stably.
    auto x = (Scalar(-2) * u.array()).eval();
    auto softplus = (x.max(Scalar(0)) + (-x.abs()).exp().log1p()).eval();
    auto log_jac = (Scalar(2) * (static_cast<Scalar>(std::log(2.0)) - u.array() - softplus)).eval();
    out.logp = (Scalar(-0.5) * eps.array().square() - out.log_std.array() - half_log_2pi - log_jac).colwise().sum().matrix();
    return out;
  }

  // Gradient of a loss L(action, logp) given dL/da and dL/dlogp.
  // Returns dL/dstates; parameter gradients accumulate into `grad`.
  MatS backward(const PolicySample<Scalar>& s, const MatS& d_action, const RowVec<Scalar>& d_logp,
                Vec<Scalar>& grad) const {
    MatS d_u = (d_action.array() * (Scalar(1) - s.action.array().square())).matrix();
    MatS d_squash = Scalar(2) * s.action;
    d_squash.array().rowwise() *= d_logp.array();
    d_u += d_squash;
    MatS std = s.log_std.array().exp().matrix();
    MatS d_log_std = (d_u.array() * std.array() * s.noise.array()).matrix();
    d_log_std.rowwise() -= d_logp;
    for (Eigen::Index j = 0; j < d_log_std.cols(); ++j)
      for (Eigen::Index i = 0; i < d_log_std.rows(); ++i)
        if (s.raw_log_std(i, j) < Scalar(kLogStdMin) || s.raw_log_std(i, j) > Scalar(kLogStdMax)) d_log_std(i, j) = 0;
    MatS d_out(2 * action_dim_, d_u.cols());
    d_out.topRows(action_dim_) = d_u;
    d_out.bottomRows(action_dim_) = d_log_std;
    return net_.backward(s.cache, d_out, grad);
  }

  // Deterministic action tanh(mean) used for evaluation.
  MatS mean_action(const MatS& states) const {
    return net_.forward(states).topRows(action_dim_).array().tanh().matrix();
  }

 private:
  int action_dim_ = 0;
  Mlp<Scalar> net_;
};

}  // namespace vgdf::nn
