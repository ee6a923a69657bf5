#pragma once

#include <stdexcept>
#include <type_traits>
#include <vector>

#include "vgdf/core/transition.hpp"
#include "vgdf/nn/critic.hpp"
#include "vgdf/nn/policy.hpp"

namespace vgdf::nn {

// Column batch of transitions.
template <typename Scalar>
struct Batch {
  Mat<Scalar> s, a, s2;
  RowVec<Scalar> r, done;
  Eigen::Index size() const { return s.cols(); }
};

template <typename Scalar>
Batch<Scalar> make_batch(const std::vector<Transition>& ts) {
  if (ts.empty()) throw std::invalid_argument("empty transition batch");
  const auto n = static_cast<Eigen::Index>(ts.size());
  const auto ds = static_cast<Eigen::Index>(ts[0].state.size()), da = static_cast<Eigen::Index>(ts[0].action.size());
  Batch<Scalar> b;
  b.s.resize(ds, n);
  b.s2.resize(ds, n);
  b.a.resize(da, n);
  b.r.resize(n);
  b.done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = ts[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < ds; ++i) {
      b.s(i, j) = static_cast<Scalar>(t.state[i]);
      b.s2(i, j) = static_cast<Scalar>(t.next_state[i]);
    }
    for (Eigen::Index i = 0; i < da; ++i) b.a(i, j) = static_cast<Scalar>(t.action[i]);
    b.r(j) = static_cast<Scalar>(t.reward);
    b.done(j) = t.terminal ? Scalar(1) : Scalar(0);
  }
  return b;
}

template <typename Scalar>
Batch<Scalar> concat(const Batch<Scalar>& x, const Batch<Scalar>& y) {
  Batch<Scalar> b;
  auto cat = [](const auto& p, const auto& q) {
    std::decay_t<decltype(p)> out(p.rows(), p.cols() + q.cols());
    out << p, q;
    return out;
  };
  b.s = cat(x.s, y.s);
  b.a = cat(x.a, y.a);
  b.s2 = cat(x.s2, y.s2);
  b.r = cat(x.r, y.r);
  b.done = cat(x.done, y.done);
  return b;
}

template <typename Scalar>
Batch<Scalar> take_columns(const Batch<Scalar>& x, const std::vector<Eigen::Index>& cols) {
  Batch<Scalar> b;
  b.s = x.s(Eigen::all, cols);
  b.a = x.a(Eigen::all, cols);
  b.s2 = x.s2(Eigen::all, cols);
  b.r = x.r(Eigen::all, cols);
  b.done = x.done(Eigen::all, cols);
  return b;
}

// y = r + gamma (1 - done) (min_i Qbar_i(s', a') - lambda log pi(a'|s')), a' ~ pi(.|s').
template <typename Scalar>
RowVec<Scalar> critic_target(const Batch<Scalar>& b, const CriticPair<Scalar>& critics,
                             const GaussianPolicy<Scalar>& pi, Scalar lambda, Scalar gamma, SeededRng& rng) {
  PolicySample<Scalar> next = pi.sample(b.s2, rng);
  RowVec<Scalar> soft = critics.min_target(b.s2, next.action) - lambda * next.logp;
  return b.r + gamma * ((RowVec<Scalar>::Ones(b.size()) - b.done).cwiseProduct(soft));
}

struct CriticLoss {
  double target = 0.0;  // weighted squared TD error over the first n_target columns
  double source = 0.0;  // ... and over the rest
  double total() const { return target + source; }
};

// Loss sum_j w_j [(Q1_j - y_j)^2 + (Q2_j - y_j)^2]; with `apply` false only the
// gradients are accumulated into grads[0], grads[1].
template <typename Scalar>
CriticLoss weighted_critic_gradient(const CriticPair<Scalar>& critics, const Batch<Scalar>& b, const std::type_identity_t<RowVec<Scalar>>& y,
                                    const std::type_identity_t<RowVec<Scalar>>& w, Eigen::Index n_target, Vec<Scalar> grads[2]) {
  if (y.size() != b.size() || w.size() != b.size()) throw std::invalid_argument("critic weights/targets size mismatch");
  CriticLoss loss;
  Mat<Scalar> x = stack_rows(b.s, b.a);
  for (int i = 0; i < 2; ++i) {
    MlpCache<Scalar> cache;
    RowVec<Scalar> q = critics.q(i).forward(x, cache);
    RowVec<Scalar> diff = q - y;
    RowVec<Scalar> sq = w.cwiseProduct(diff.cwiseProduct(diff));
    loss.target += static_cast<double>(sq.head(n_target).sum());
    loss.source += static_cast<double>(sq.tail(b.size() - n_target).sum());
    grads[i] = Vec<Scalar>::Zero(critics.q(i).n_params());
    Mat<Scalar> d = (Scalar(2) * w.cwiseProduct(diff));
    critics.q(i).backward(cache, d, grads[i]);
  }
  return loss;
}

template <typename Scalar>
CriticLoss weighted_critic_step(CriticPair<Scalar>& critics, Adam<Scalar> opt[2], const Batch<Scalar>& b,
                                const std::type_identity_t<RowVec<Scalar>>& y,
                                const std::type_identity_t<RowVec<Scalar>>& w, Eigen::Index n_target) {
  Vec<Scalar> grads[2];
  CriticLoss loss = weighted_critic_gradient(critics, b, y, w, n_target, grads);
  for (int i = 0; i < 2; ++i) opt[i].step(critics.q(i).params(), grads[i]);
  return loss;
}

// Which critic aggregate the policy ascends.
enum class QAggregate { Min, Max };

struct PolicyLossOptions {
  double lambda = 0.2;
  QAggregate aggregate = QAggregate::Min;
  // Q-term scale; 0 or negative means "alpha / mean|Q|" with the alpha below.
  double q_weight = 1.0;
  double bc_alpha = 0.0;
  bool normalize_q = false;
};

struct PolicyLossReport {
  double loss = 0.0;
  double entropy = 0.0;       // -mean log pi
  double q_mean = 0.0;        // mean aggregated Q
  double q_weight = 1.0;      // beta actually used
  double bc_error = 0.0;      // mean squared action error on BC columns
};

// Loss = q_weight * mean(lambda log pi - Qagg(s, a)) [+ mean ||tanh(mu(s_bc)) - a_bc||^2].
// Reparameterized with the given noise; gradient accumulates into `grad`.
template <typename Scalar>
PolicyLossReport policy_loss_gradient(const GaussianPolicy<Scalar>& pi, const CriticPair<Scalar>& critics,
                                      const Mat<Scalar>& states, const Mat<Scalar>& noise,
                                      const PolicyLossOptions& opt, Vec<Scalar>& grad,
                                      const Mat<Scalar>* bc_states = nullptr, const Mat<Scalar>* bc_actions = nullptr) {
  const Eigen::Index n = states.cols();
  if (n == 0) throw std::invalid_argument("policy update needs a nonempty batch");
  if (grad.size() != pi.net().n_params()) grad = Vec<Scalar>::Zero(pi.net().n_params());
  PolicySample<Scalar> smp = pi.sample(states, noise);
  Mat<Scalar> x = stack_rows(states, smp.action);
  MlpCache<Scalar> cache[2];
  RowVec<Scalar> q[2];
  for (int i = 0; i < 2; ++i) q[i] = critics.q(i).forward(x, cache[i]);
  RowVec<Scalar> agg(n);
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    bool first = opt.aggregate == QAggregate::Min ? q[0](j) <= q[1](j) : q[0](j) >= q[1](j);
    pick[static_cast<std::size_t>(j)] = first ? 0 : 1;
    agg(j) = q[first ? 0 : 1](j);
  }
  PolicyLossReport rep;
  double beta = opt.q_weight;
  if (opt.normalize_q) beta = opt.bc_alpha / std::max(1e-8, static_cast<double>(agg.cwiseAbs().mean()));
  rep.q_weight = beta;
  const Scalar lam = static_cast<Scalar>(opt.lambda), bw = static_cast<Scalar>(beta);
  rep.q_mean = static_cast<double>(agg.mean());
  rep.entropy = -static_cast<double>(smp.logp.mean());
  rep.loss = beta * static_cast<double>((lam * smp.logp - agg).mean());

  // dL/dQagg = -beta/n, routed to whichever critic was picked.
  Mat<Scalar> d_action = Mat<Scalar>::Zero(pi.action_dim(), n);
  Vec<Scalar> scratch;
  for (int i = 0; i < 2; ++i) {
    Mat<Scalar> d_q = Mat<Scalar>::Zero(1, n);
    bool any = false;
    for (Eigen::Index j = 0; j < n; ++j)
      if (pick[static_cast<std::size_t>(j)] == i) {
        d_q(0, j) = -bw / static_cast<Scalar>(n);
        any = true;
      }
    if (!any) continue;
    scratch = Vec<Scalar>::Zero(critics.q(i).n_params());
    Mat<Scalar> d_in = critics.q(i).backward(cache[i], d_q, scratch);
    d_action += d_in.bottomRows(pi.action_dim());
  }
  RowVec<Scalar> d_logp = RowVec<Scalar>::Constant(n, bw * lam / static_cast<Scalar>(n));
  pi.backward(smp, d_action, d_logp, grad);

  if (bc_states && bc_actions && bc_states->cols() > 0) {
    const Eigen::Index m = bc_states->cols();
    MlpCache<Scalar> bc_cache;
    Mat<Scalar> out = pi.net().forward(*bc_states, bc_cache);
    Mat<Scalar> act = out.topRows(pi.action_dim()).array().tanh().matrix();
    Mat<Scalar> err = act - *bc_actions;
    rep.bc_error = static_cast<double>(err.squaredNorm()) / static_cast<double>(m);
    rep.loss += rep.bc_error;
    Mat<Scalar> d_out = Mat<Scalar>::Zero(out.rows(), m);
    d_out.topRows(pi.action_dim()) =
        (Scalar(2) / static_cast<Scalar>(m) * err.array() * (Scalar(1) - act.array().square())).matrix();
    pi.net().backward(bc_cache, d_out, grad);
  }
  return rep;
}

template <typename Scalar>
PolicyLossReport policy_update(GaussianPolicy<Scalar>& pi, Adam<Scalar>& opt, const CriticPair<Scalar>& critics,
                               const Mat<Scalar>& states, const PolicyLossOptions& options, SeededRng& rng,
                               const Mat<Scalar>* bc_states = nullptr, const Mat<Scalar>* bc_actions = nullptr) {
  Vec<Scalar> grad = Vec<Scalar>::Zero(pi.net().n_params());
  Mat<Scalar> noise = pi.noise(states.cols(), rng);
  PolicyLossReport rep = policy_loss_gradient(pi, critics, states, noise, options, grad, bc_states, bc_actions);
  opt.step(pi.net().params(), grad);
  return rep;
}

// Exploration policy: ascends max_i Q_i instead of the min.
template <typename Scalar>
PolicyLossReport optimistic_policy_update(GaussianPolicy<Scalar>& pi_e, Adam<Scalar>& opt,
                                          const CriticPair<Scalar>& critics, const Mat<Scalar>& states,
                                          double lambda, SeededRng& rng) {
  PolicyLossOptions o;
  o.lambda = lambda;
  o.aggregate = QAggregate::Max;
  return policy_update(pi_e, opt, critics, states, o, rng);
}

}  // namespace vgdf::nn
