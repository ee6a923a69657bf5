#pragma once

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "vgdf/nn/sac.hpp"

namespace vgdf::dynamics {

using nn::Mat;
using nn::Mlp;
using nn::RowVec;
using nn::Vec;

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 0.5;

// Running per-feature mean/std (Welford), used to normalize model inputs.
template <typename Scalar>
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim) : mean_(Vec<double>::Zero(dim)), m2_(Vec<double>::Zero(dim)) {}

  void observe(const Vec<double>& x) {
    ++count_;
    Vec<double> d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d.cwiseProduct(x - mean_);
  }

  std::size_t count() const { return count_; }
  Vec<double> mean() const { return mean_; }
  Vec<double> stddev() const {
    if (count_ < 2) return Vec<double>::Ones(mean_.size());
    return (m2_ / static_cast<double>(count_)).cwiseSqrt().cwiseMax(1e-6);
  }

  Mat<Scalar> apply(const Mat<Scalar>& x) const {
    Vec<Scalar> mu = mean_.cast<Scalar>(), inv = stddev().cwiseInverse().template cast<Scalar>();
    return ((x.colwise() - mu).array().colwise() * inv.array()).matrix();
  }

  void set(const Vec<double>& mean, const Vec<double>& m2, std::size_t count) {
    mean_ = mean;
    m2_ = m2;
    count_ = count;
  }
  const Vec<double>& m2() const { return m2_; }

 private:
  Vec<double> mean_, m2_;
  std::size_t count_ = 0;
};

template <typename Scalar>
struct GaussianPrediction {
  Mat<Scalar> mean;     // (state_dim + 1) x batch: [delta state; reward]
  Mat<Scalar> log_var;  // same shape, inside [kLogVarMin, kLogVarMax]
};

template <typename Scalar>
struct FictitiousSample {
  Mat<Scalar> next_state;  // state_dim x batch
  RowVec<Scalar> reward;
};

struct EnsembleConfig {
  int members = 7;
  int width = 200;
  int depth = 5;
  double learning_rate = 3e-4;
};

// Ensemble of Gaussian models over (s' - s, r) given (s, a), trained by
// negative log-likelihood on target-domain data.
template <typename Scalar>
class DynamicsEnsemble {
 public:
  using MatS = Mat<Scalar>;

  DynamicsEnsemble() = default;
  DynamicsEnsemble(int state_dim, int action_dim, const EnsembleConfig& cfg)
      : state_dim_(state_dim), action_dim_(action_dim), cfg_(cfg), norm_(state_dim + action_dim) {
    if (cfg.members <= 0) throw std::invalid_argument("ensemble needs at least one member");
    for (int i = 0; i < cfg.members; ++i) {
      nets_.push_back(Mlp<Scalar>::make(state_dim + action_dim, 2 * (state_dim + 1), cfg.width, cfg.depth,
                                        nn::Activation::Swish));
      opts_.emplace_back(nets_.back().n_params(), static_cast<Scalar>(cfg.learning_rate));
    }
  }

  void init(SeededRng& rng) {
    for (auto& n : nets_) n.init(rng);
  }

  int members() const { return static_cast<int>(nets_.size()); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int output_dim() const { return state_dim_ + 1; }
  bool trained() const { return steps_ > 0; }
  long train_steps() const { return steps_; }
  const EnsembleConfig& config() const { return cfg_; }
  Mlp<Scalar>& member(int i) { return nets_[static_cast<std::size_t>(i)]; }
  const Mlp<Scalar>& member(int i) const { return nets_[static_cast<std::size_t>(i)]; }
  RunningNormalizer<Scalar>& normalizer() { return norm_; }
  const RunningNormalizer<Scalar>& normalizer() const { return norm_; }

  void observe(const Transition& t) {
    Vec<double> x(state_dim_ + action_dim_);
    for (int i = 0; i < state_dim_; ++i) x(i) = t.state[static_cast<std::size_t>(i)];
    for (int i = 0; i < action_dim_; ++i) x(state_dim_ + i) = t.action[static_cast<std::size_t>(i)];
    norm_.observe(x);
  }

  MatS inputs(const MatS& s, const MatS& a) const { return norm_.apply(nn::stack_rows(s, a)); }

  GaussianPrediction<Scalar> predict(int i, const MatS& s, const MatS& a) const {
    MatS raw = member(i).forward(inputs(s, a));
    return split(raw);
  }

  // Soft clamp: lv = max - softplus(max - raw), then min + softplus(lv - min).
  // The second softplus overshoots max by ~3e-5, which the final clip removes.
  static Scalar soft_clamp(Scalar raw, Scalar* slope = nullptr) {
    const Scalar hi = static_cast<Scalar>(kLogVarMax), lo = static_cast<Scalar>(kLogVarMin);
    Scalar a = hi - softplus(hi - raw);
    Scalar b = lo + softplus(a - lo);
    if (slope) *slope = b > hi ? Scalar(0) : sigmoid(hi - raw) * sigmoid(a - lo);
    return std::min(b, hi);
  }

  // Elementwise soft_clamp over an array.
  template <typename Derived>
  static Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> soft_clamp_array(
      const Eigen::ArrayBase<Derived>& raw, Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>* slope = nullptr) {
    using ArrayS = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Scalar hi = static_cast<Scalar>(kLogVarMax), lo = static_cast<Scalar>(kLogVarMin);
    auto sp = [](const ArrayS& v) -> ArrayS { return v.max(Scalar(0)) + (-v.abs()).exp().log1p(); };
    auto sig = [](const ArrayS& v) -> ArrayS { return (Scalar(1) + (-v).exp()).inverse(); };
    ArrayS top = hi - raw;
    ArrayS a = hi - sp(top);
    ArrayS b = lo + sp(a - lo);
    if (slope) *slope = (b > hi).select(ArrayS::Zero(b.rows(), b.cols()), sig(top) * sig(a - lo));
    return b.min(hi);
  }

  // One NLL gradient step per member on its own bootstrap resample of
  // `batch`. Returns the per-member mean NLL before the step.
  std::vector<double> train_step(const nn::Batch<Scalar>& batch, SeededRng& rng) {
    std::vector<double> nll(nets_.size(), 0.0);
    if (batch.size() == 0) {
      std::cerr << "warning: dynamics ensemble step skipped, empty target batch\n";
      return nll;
    }
    const Eigen::Index n = batch.size();
    MatS x_all = inputs(batch.s, batch.a);
    MatS y_all(output_dim(), n);
    y_all.topRows(state_dim_) = batch.s2 - batch.s;
    y_all.bottomRows(1) = batch.r;
    for (std::size_t m = 0; m < nets_.size(); ++m) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      for (auto& k : idx) k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      MatS x = x_all(Eigen::all, idx), y = y_all(Eigen::all, idx);
      Vec<Scalar> grad = Vec<Scalar>::Zero(nets_[m].n_params());
      nll[m] = nll_gradient(nets_[m], x, y, &grad);
      opts_[m].step(nets_[m].params(), grad);
    }
    ++steps_;
    return nll;
  }

  // Mean Gaussian NLL per output element (including the 0.5 log 2 pi term),
  // optionally accumulating its gradient.
  double nll_gradient(const Mlp<Scalar>& net, const MatS& x, const MatS& y, Vec<Scalar>* grad) const {
    using ArrayS = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    nn::MlpCache<Scalar> cache;
    MatS raw = net.forward(x, cache);
    const int d = output_dim();
    const Eigen::Index n = x.cols();
    const Scalar scale = Scalar(1) / static_cast<Scalar>(n * d);
    ArrayS slope;
    ArrayS lv = soft_clamp_array(raw.bottomRows(d).array(), &slope);
    ArrayS inv_var = (-lv).exp();
    ArrayS err = raw.topRows(d).array() - y.array();
    ArrayS sq = err.square() * inv_var;
    double total = (sq + lv).template cast<double>().sum() + static_cast<double>(n * d) * std::log(2.0 * M_PI);
    if (grad) {
      MatS d_out(2 * d, n);
      d_out.topRows(d) = (err * inv_var * scale).matrix();
      d_out.bottomRows(d) = (Scalar(0.5) * (Scalar(1) - sq) * slope * scale).matrix();
      net.backward(cache, d_out, *grad);
    }
    return 0.5 * total / static_cast<double>(n * d);
  }

  // Mean NLL of each member on held-out data, no update.
  std::vector<double> evaluate_nll(const nn::Batch<Scalar>& batch) const {
    MatS x = inputs(batch.s, batch.a);
    MatS y(output_dim(), batch.size());
    y.topRows(state_dim_) = batch.s2 - batch.s;
    y.bottomRows(1) = batch.r;
    std::vector<double> out;
    for (const auto& net : nets_) out.push_back(nll_gradient(net, x, y, nullptr));
    return out;
  }

  // One draw per member: s' = s + delta. With use_mean the member means are returned.
  std::vector<FictitiousSample<Scalar>> sample_fictitious(const MatS& s, const MatS& a, SeededRng& rng,
                                                          bool use_mean = false) const {
    MatS x = inputs(s, a);
    std::vector<FictitiousSample<Scalar>> out;
    out.reserve(nets_.size());
    for (const auto& net : nets_) {
      GaussianPrediction<Scalar> p = split(net.forward(x));
      MatS draw = p.mean;
      if (!use_mean) {
        MatS eps(draw.rows(), draw.cols());
        for (Eigen::Index j = 0; j < eps.cols(); ++j)
          for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = static_cast<Scalar>(rng.normal());
        draw.array() += (Scalar(0.5) * p.log_var.array()).exp() * eps.array();
      }
      FictitiousSample<Scalar> f;
      f.next_state = s + draw.topRows(state_dim_);
      f.reward = draw.bottomRows(1);
      out.push_back(std::move(f));
    }
    return out;
  }

 private:
  static Scalar softplus(Scalar x) { return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x))); }
  static Scalar sigmoid(Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); }

  GaussianPrediction<Scalar> split(const MatS& raw) const {
    const int d = output_dim();
    GaussianPrediction<Scalar> p;
    p.mean = raw.topRows(d);
    p.log_var = soft_clamp_array(raw.bottomRows(d).array()).matrix();
    return p;
  }

  int state_dim_ = 0;
  int action_dim_ = 0;
  EnsembleConfig cfg_;
  RunningNormalizer<Scalar> norm_;
  std::vector<Mlp<Scalar>> nets_;
  std::vector<nn::Adam<Scalar>> opts_;
  long steps_ = 0;
};

}  // namespace vgdf::dynamics
