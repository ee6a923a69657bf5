#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vgdf/nn/critic.hpp"
#include "vgdf/nn/sac.hpp"

namespace vgdf::baselines {

using nn::Mat;
using nn::RowVec;

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kWeightMin = 1e-4;
inline constexpr double kWeightMax = 1.0;

// Domain probabilities for one batch, each a row over the batch.
struct DomainProbs {
  std::vector<double> sas_target, sas_source, sa_target, sa_source;
};

// Delta r = log q_SAS(tar)/q_SAS(src) + log q_SA(src)/q_SA(tar), probabilities floored.
inline double darc_delta(double sas_tar, double sas_src, double sa_tar, double sa_src) {
  auto f = [](double p) { return std::max(p, kProbabilityFloor); };
  return std::log(f(sas_tar)) - std::log(f(sas_src)) + std::log(f(sa_src)) - std::log(f(sa_tar));
}

inline double clip_weight(double raw) { return std::min(std::max(raw, kWeightMin), kWeightMax); }

// Two domain classifiers: q_SAS on (s, a, s') and q_SA on (s, a). Logit row 0
// is the source class, row 1 the target class.
template <typename Scalar>
class DomainClassifierPair {
 public:
  DomainClassifierPair() = default;
  DomainClassifierPair(int state_dim, int action_dim, int width, int depth, double learning_rate = 3e-4,
                       double noise_std = 1.0)
      : noise_std_(noise_std),
        sas_(nn::Mlp<Scalar>::make(2 * state_dim + action_dim, 2, width, depth, nn::Activation::Relu)),
        sa_(nn::Mlp<Scalar>::make(state_dim + action_dim, 2, width, depth, nn::Activation::Relu)),
        sas_opt_(sas_.n_params(), static_cast<Scalar>(learning_rate)),
        sa_opt_(sa_.n_params(), static_cast<Scalar>(learning_rate)) {}

  void init(SeededRng& rng) {
    sas_.init(rng);
    sa_.init(rng);
  }

  double noise_std() const { return noise_std_; }
  nn::Mlp<Scalar>& sas() { return sas_; }
  nn::Mlp<Scalar>& sa() { return sa_; }
  const nn::Mlp<Scalar>& sas() const { return sas_; }
  const nn::Mlp<Scalar>& sa() const { return sa_; }

  static Mat<Scalar> sas_input(const nn::Batch<Scalar>& b) { return nn::stack_rows(nn::stack_rows(b.s, b.a), b.s2); }
  static Mat<Scalar> sa_input(const nn::Batch<Scalar>& b) { return nn::stack_rows(b.s, b.a); }

  // One cross-entropy step per classifier on source (label 0) and target
  // (label 1) batches, inputs perturbed by N(0, noise_std^2). Returns the
  // two losses before the step.
  std::pair<double, double> train(const nn::Batch<Scalar>& src, const nn::Batch<Scalar>& tar, SeededRng& rng) {
    if (src.size() == 0 || tar.size() == 0) throw std::invalid_argument("classifier training needs both batches");
    std::vector<int> labels(static_cast<std::size_t>(src.size()), 0);
    labels.resize(static_cast<std::size_t>(src.size() + tar.size()), 1);
    auto cat = [](const Mat<Scalar>& x, const Mat<Scalar>& y) {
      Mat<Scalar> out(x.rows(), x.cols() + y.cols());
      out << x, y;
      return out;
    };
    Mat<Scalar> x_sas = cat(sas_input(src), sas_input(tar));
    Mat<Scalar> x_sa = cat(sa_input(src), sa_input(tar));
    add_noise(x_sas, rng);
    add_noise(x_sa, rng);
    double l1 = step(sas_, sas_opt_, x_sas, labels);
    double l2 = step(sa_, sa_opt_, x_sa, labels);
    return {l1, l2};
  }

  // Softmax cross-entropy and its gradient; labels index the logit rows.
  static double cross_entropy(const nn::Mlp<Scalar>& net, const Mat<Scalar>& x, const std::vector<int>& labels,
                              nn::Vec<Scalar>* grad) {
    nn::MlpCache<Scalar> cache;
    Mat<Scalar> z = net.forward(x, cache);
    const Eigen::Index n = x.cols();
    Mat<Scalar> d(2, n);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      Scalar m = std::max(z(0, j), z(1, j));
      Scalar e0 = std::exp(z(0, j) - m), e1 = std::exp(z(1, j) - m);
      Scalar lse = m + std::log(e0 + e1);
      int y = labels[static_cast<std::size_t>(j)];
      loss += static_cast<double>(lse - z(y, j));
      Scalar p1 = e1 / (e0 + e1);
      d(0, j) = ((Scalar(1) - p1) - (y == 0 ? Scalar(1) : Scalar(0))) / static_cast<Scalar>(n);
      d(1, j) = (p1 - (y == 1 ? Scalar(1) : Scalar(0))) / static_cast<Scalar>(n);
    }
    if (grad) net.backward(cache, d, *grad);
    return loss / static_cast<double>(n);
  }

  // Probabilities without input noise.
  DomainProbs probs(const nn::Batch<Scalar>& b) const {
    DomainProbs p;
    split(sas_.forward(sas_input(b)), p.sas_source, p.sas_target);
    split(sa_.forward(sa_input(b)), p.sa_source, p.sa_target);
    return p;
  }

  std::vector<double> delta_reward(const nn::Batch<Scalar>& b) const {
    DomainProbs p = probs(b);
    std::vector<double> out(p.sas_target.size());
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = darc_delta(p.sas_target[j], p.sas_source[j], p.sa_target[j], p.sa_source[j]);
    return out;
  }

 private:
  void add_noise(Mat<Scalar>& x, SeededRng& rng) const {
    if (noise_std_ <= 0.0) return;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += static_cast<Scalar>(noise_std_ * rng.normal());
  }

  static double step(nn::Mlp<Scalar>& net, nn::Adam<Scalar>& opt, const Mat<Scalar>& x, const std::vector<int>& labels) {
    nn::Vec<Scalar> grad = nn::Vec<Scalar>::Zero(net.n_params());
    double loss = cross_entropy(net, x, labels, &grad);
    opt.step(net.params(), grad);
    return loss;
  }

  static void split(const Mat<Scalar>& z, std::vector<double>& p_src, std::vector<double>& p_tar) {
    p_src.resize(static_cast<std::size_t>(z.cols()));
    p_tar.resize(static_cast<std::size_t>(z.cols()));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double a = static_cast<double>(z(0, j)), b = static_cast<double>(z(1, j));
      double m = std::max(a, b);
      double e0 = std::exp(a - m), e1 = std::exp(b - m);
      p_src[static_cast<std::size_t>(j)] = e0 / (e0 + e1);
      p_tar[static_cast<std::size_t>(j)] = e1 / (e0 + e1);
    }
  }

  double noise_std_ = 1.0;
  nn::Mlp<Scalar> sas_, sa_;
  nn::Adam<Scalar> sas_opt_, sa_opt_;
};

}  // namespace vgdf::baselines
