#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/core/rng.hpp"

namespace vgdf::nn {

enum class Activation { Relu, Swish, Identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Swish: return "swish";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "swish") return Activation::Swish;
  if (s == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Intermediate values kept by a forward pass for the matching backward pass.
template <typename Scalar>
struct MlpCache {
  std::vector<Mat<Scalar>> pre;   // pre-activations per layer
  std::vector<Mat<Scalar>> post;  // post[0] is the input
};

// Fully connected network on column batches (features x batch). Parameters
// live in one flat vector: for each layer W (out x in, column-major) then b.
template <typename Scalar>
class Mlp {
 public:
  using MatS = Mat<Scalar>;
  using VecS = Vec<Scalar>;

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden) : sizes_(std::move(sizes)), hidden_(hidden) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("layer sizes must be positive");
      offsets_.push_back(total);
      total += static_cast<std::size_t>(sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
    }
    params_ = VecS::Zero(static_cast<Eigen::Index>(total));
  }

  // Hidden layers of equal width.
  static Mlp make(int in, int out, int width, int depth, Activation hidden) {
    std::vector<int> sizes{in};
    for (int i = 0; i < depth; ++i) sizes.push_back(width);
    sizes.push_back(out);
    return Mlp(sizes, hidden);
  }

  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t n_layers() const { return sizes_.size() - 1; }
  Eigen::Index n_params() const { return params_.size(); }
  VecS& params() { return params_; }
  const VecS& params() const { return params_; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(SeededRng& rng) {
    for (std::size_t l = 0; l < n_layers(); ++l) {
      Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(sizes_[l]));
      auto block = params_.segment(offsets_[l], sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
      for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }

  Eigen::Map<const MatS> weight(const VecS& p, std::size_t l) const {
    return Eigen::Map<const MatS>(p.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<const VecS> bias(const VecS& p, std::size_t l) const {
    return Eigen::Map<const VecS>(p.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], sizes_[l + 1]);
  }
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }

  MatS forward(const MatS& x) const { return forward(params_, x, nullptr); }
  MatS forward(const MatS& x, MlpCache<Scalar>& cache) const { return forward(params_, x, &cache); }

  // Forward with an external parameter vector of the same shape (target nets).
  MatS forward(const VecS& p, const MatS& x, MlpCache<Scalar>* cache) const {
    check_input(x);
    if (cache) {
      cache->pre.resize(n_layers());
      cache->post.resize(n_layers() + 1);
      cache->post[0] = x;
    }
    MatS h = x;
    for (std::size_t l = 0; l < n_layers(); ++l) {
      MatS z = weight(p, l) * h;
      z.colwise() += bias(p, l);
      bool last = l + 1 == n_layers();
      if (cache) cache->pre[l] = z;
      h = last ? z : activate(z);
      if (cache) cache->post[l + 1] = h;
    }
    return h;
  }

  // Accumulates dL/dparams into `grad` and returns dL/dinput.
  MatS backward(const MlpCache<Scalar>& cache, const MatS& d_out, VecS& grad) const {
    return backward(params_, cache, d_out, grad);
  }

  MatS backward(const VecS& p, const MlpCache<Scalar>& cache, const MatS& d_out, VecS& grad) const {
    if (grad.size() != p.size()) grad = VecS::Zero(p.size());
    MatS delta = d_out;
    for (std::size_t l = n_layers(); l-- > 0;) {
      if (l + 1 != n_layers()) apply_derivative(cache.pre[l], delta);
      Eigen::Map<MatS> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
      Eigen::Map<VecS> gb(grad.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], sizes_[l + 1]);
      gw.noalias() += delta * cache.post[l].transpose();
      gb += delta.rowwise().sum();
      delta = weight(p, l).transpose() * delta;
    }
    return delta;
  }

  MatS activate(const MatS& z) const {
    switch (hidden_) {
      case Activation::Relu: return z.cwiseMax(Scalar(0));
      case Activation::Swish: return (z.array() / (Scalar(1) + (-z.array()).exp())).matrix();
      case Activation::Identity: return z;
    }
    return z;
  }

  // delta *= act'(z), in place.
  void apply_derivative(const MatS& z, MatS& delta) const {
    switch (hidden_) {
      case Activation::Relu: delta = (z.array() > Scalar(0)).select(delta, Scalar(0)); return;
      case Activation::Swish: {
        auto sig = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).eval();
        delta.array() *= sig * (Scalar(1) + z.array() * (Scalar(1) - sig));
        return;
      }
      case Activation::Identity: return;
    }
  }

  MatS derivative(const MatS& z) const {
    switch (hidden_) {
      case Activation::Relu: return (z.array() > Scalar(0)).template cast<Scalar>().matrix();
      case Activation::Swish: {
        auto sig = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).eval();
        return (sig * (Scalar(1) + z.array() * (Scalar(1) - sig))).matrix();
      }
      case Activation::Identity: return MatS::Ones(z.rows(), z.cols());
    }
    return MatS::Ones(z.rows(), z.cols());
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_, hidden_);
    out.params() = params_.template cast<Other>();
    return out;
  }

 private:
  void check_input(const MatS& x) const {
    if (x.rows() != sizes_.front()) {
      std::ostringstream msg;
      msg << "network input has " << x.rows() << " rows, expected " << sizes_.front();
      throw std::invalid_argument(msg.str());
    }
  }

  std::vector<int> sizes_;
  Activation hidden_ = Activation::Relu;
  std::vector<std::size_t> offsets_;
  VecS params_;
};

template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  explicit Adam(Eigen::Index n, Scalar lr = Scalar(3e-4), Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                Scalar eps = Scalar(1e-8))
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Vec<Scalar>::Zero(n)), v_(Vec<Scalar>::Zero(n)) {}

  // Descends along `grad`.
  void step(Vec<Scalar>& params, const Vec<Scalar>& grad) {
    if (grad.size() != m_.size() || params.size() != m_.size()) throw std::invalid_argument("optimizer size mismatch");
    ++t_;
    m_ = b1_ * m_ + (Scalar(1) - b1_) * grad;
    v_ = b2_ * v_ + (Scalar(1) - b2_) * grad.cwiseProduct(grad);
    Scalar c1 = Scalar(1) - std::pow(b1_, static_cast<Scalar>(t_));
    Scalar c2 = Scalar(1) - std::pow(b2_, static_cast<Scalar>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  long steps() const { return t_; }
  Scalar learning_rate() const { return lr_; }

 private:
  Scalar lr_ = Scalar(3e-4), b1_ = Scalar(0.9), b2_ = Scalar(0.999), eps_ = Scalar(1e-8);
  Vec<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace vgdf::nn
