#pragma once

#include "vgdf/nn/mlp.hpp"

namespace vgdf::nn {

template <typename Scalar>
Mat<Scalar> stack_rows(const Mat<Scalar>& top, const Mat<Scalar>& bottom) {
  Mat<Scalar> out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

// Twin Q networks on concatenated (state; action) columns plus slow targets.
template <typename Scalar>
class CriticPair {
 public:
  using MatS = Mat<Scalar>;

  CriticPair() = default;
  CriticPair(int state_dim, int action_dim, int width, int depth)
      : state_dim_(state_dim), action_dim_(action_dim) {
    for (auto& q : q_) q = Mlp<Scalar>::make(state_dim + action_dim, 1, width, depth, Activation::Relu);
  }

  void init(SeededRng& rng) {
    for (int i = 0; i < 2; ++i) {
      q_[i].init(rng);
      target_[i] = q_[i].params();
    }
  }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  Mlp<Scalar>& q(int i) { return q_[i]; }
  const Mlp<Scalar>& q(int i) const { return q_[i]; }
  Vec<Scalar>& target(int i) { return target_[i]; }
  const Vec<Scalar>& target(int i) const { return target_[i]; }

  RowVec<Scalar> value(int i, const MatS& s, const MatS& a) const { return q_[i].forward(stack_rows(s, a)); }
  RowVec<Scalar> target_value(int i, const MatS& s, const MatS& a) const {
    return q_[i].forward(target_[i], stack_rows(s, a), nullptr);
  }
  RowVec<Scalar> min_value(const MatS& s, const MatS& a) const {
    MatS x = stack_rows(s, a);
    return q_[0].forward(x).cwiseMin(q_[1].forward(x));
  }
  RowVec<Scalar> min_target(const MatS& s, const MatS& a) const {
    MatS x = stack_rows(s, a);
    return q_[0].forward(target_[0], x, nullptr).cwiseMin(q_[1].forward(target_[1], x, nullptr));
  }

  // theta_bar <- (1 - tau) theta_bar + tau theta.
  void soft_update(Scalar tau) {
    for (int i = 0; i < 2; ++i) target_[i] = (Scalar(1) - tau) * target_[i] + tau * q_[i].params();
  }

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  Mlp<Scalar> q_[2];
  Vec<Scalar> target_[2];
};

}  // namespace vgdf::nn
