#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vgdf/algo/config.hpp"
#include "vgdf/algo/filtered.hpp"
#include "vgdf/algo/fvp.hpp"
#include "vgdf/dynamics/ensemble.hpp"
#include "vgdf/nn/checkpoint.hpp"
#include "vgdf/nn/sac.hpp"

namespace vgdf::algo {

using Real = float;

// Networks and optimizers of one run: target policy, optimistic exploration
// policy, twin critics, and the target-dynamics ensemble.
template <typename Scalar = Real>
struct Agent {
  VgdfConfig cfg;
  int state_dim = 0, action_dim = 0;
  nn::GaussianPolicy<Scalar> pi, pi_e;
  nn::CriticPair<Scalar> critics;
  nn::Adam<Scalar> pi_opt, pi_e_opt;
  nn::Adam<Scalar> critic_opt[2];
  dynamics::DynamicsEnsemble<Scalar> model;
  long updates = 0;

  Agent(int ds, int da, const VgdfConfig& c)
      : cfg(c),
        state_dim(ds),
        action_dim(da),
        pi(ds, da, static_cast<int>(c.hidden_width), static_cast<int>(c.hidden_depth)),
        pi_e(pi),
        critics(ds, da, static_cast<int>(c.hidden_width), static_cast<int>(c.hidden_depth)),
        pi_opt(pi.net().n_params(), static_cast<Scalar>(c.learning_rate)),
        pi_e_opt(pi.net().n_params(), static_cast<Scalar>(c.learning_rate)),
        critic_opt{nn::Adam<Scalar>(critics.q(0).n_params(), static_cast<Scalar>(c.learning_rate)),
                   nn::Adam<Scalar>(critics.q(1).n_params(), static_cast<Scalar>(c.learning_rate))},
        model(ds, da,
              dynamics::EnsembleConfig{static_cast<int>(c.ensemble_size), static_cast<int>(c.ensemble_width),
                                       static_cast<int>(c.ensemble_depth), c.ensemble_lr}) {}

  void init(SeededRng& rng) {
    pi.init(rng);
    pi_e.net().params() = pi.net().params();
    critics.init(rng);
    model.init(rng);
  }

  // Stochastic action, or the squashed mean with `deterministic`.
  std::vector<double> act(const std::vector<double>& state, SeededRng& rng, bool explore = false,
                          bool deterministic = false) const {
    const nn::GaussianPolicy<Scalar>& p = explore ? pi_e : pi;
    nn::Mat<Scalar> s(state_dim, 1);
    for (int i = 0; i < state_dim; ++i) s(i, 0) = static_cast<Scalar>(state[static_cast<std::size_t>(i)]);
    nn::Mat<Scalar> a = deterministic ? p.mean_action(s) : p.sample(s, rng).action;
    std::vector<double> out(static_cast<std::size_t>(action_dim));
    for (int i = 0; i < action_dim; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(a(i, 0));
    return out;
  }

  void save(nn::Checkpoint& ck) const {
    ck.add_network("policy", pi.net());
    ck.add_network("explore_policy", pi_e.net());
    for (int i = 0; i < 2; ++i) {
      ck.add_network("critic" + std::to_string(i), critics.q(i));
      ck.add_vector("critic_target" + std::to_string(i), critics.target(i));
    }
    for (int m = 0; m < model.members(); ++m) ck.add_network("model" + std::to_string(m), model.member(m));
    const auto& norm = model.normalizer();
    ck.add_vector("model_norm_mean", norm.mean());
    ck.add_vector("model_norm_m2", norm.m2());
    ck.add_vector("model_norm_count", nn::Vec<double>(nn::Vec<double>::Constant(1, static_cast<double>(norm.count()))));
  }

  void load(const nn::Checkpoint& ck) {
    auto assign = [](nn::Mlp<Scalar>& dst, const nn::Mlp<Scalar>& src, const std::string& name) {
      if (dst.sizes() != src.sizes())
        throw std::runtime_error("checkpoint network '" + name + "' does not match the configured shape");
      dst.params() = src.params();
    };
    assign(pi.net(), ck.network<Scalar>("policy"), "policy");
    assign(pi_e.net(), ck.network<Scalar>("explore_policy"), "explore_policy");
    for (int i = 0; i < 2; ++i) {
      std::string name = "critic" + std::to_string(i);
      assign(critics.q(i), ck.network<Scalar>(name), name);
      critics.target(i) = ck.vector<Scalar>("critic_target" + std::to_string(i));
    }
    for (int m = 0; m < model.members(); ++m) {
      std::string name = "model" + std::to_string(m);
      assign(model.member(m), ck.network<Scalar>(name), name);
    }
    model.normalizer().set(ck.vector<double>("model_norm_mean"), ck.vector<double>("model_norm_m2"),
                           static_cast<std::size_t>(ck.vector<double>("model_norm_count")(0)));
  }
};

// Diagnostics of one update; NaN marks quantities a method does not compute.
struct UpdateStats {
  double critic_loss_tar = 0.0;
  double critic_loss_src = 0.0;
  double fvp_mean = std::numeric_limits<double>::quiet_NaN();
  double fvp_log_mean = std::numeric_limits<double>::quiet_NaN();
  double selected_fraction = std::numeric_limits<double>::quiet_NaN();
  double policy_entropy = std::numeric_limits<double>::quiet_NaN();
  long selected_count = -1;
  bool filtered = false;
  bool log_mask_matches = true;
};

template <typename Scalar>
nn::Mat<Scalar> union_states(const Batch<Scalar>& b_tar, const Batch<Scalar>& b_src) {
  nn::Mat<Scalar> s(b_tar.s.rows(), b_tar.size() + b_src.size());
  s << b_tar.s, b_src.s;
  return s;
}

// Delayed actor step(s) and the soft target update shared by all online
// methods. pi ascends min-Q; pi_e (if exploring) ascends max-Q.
template <typename Scalar>
void actor_step(Agent<Scalar>& ag, const nn::Mat<Scalar>& states, SeededRng& rng, UpdateStats& st, bool explore) {
  if (ag.updates % ag.cfg.policy_delay == 0) {
    nn::PolicyLossOptions o;
    o.lambda = ag.cfg.lambda;
    auto rep = nn::policy_update(ag.pi, ag.pi_opt, ag.critics, states, o, rng);
    st.policy_entropy = rep.entropy;
    if (explore) nn::optimistic_policy_update(ag.pi_e, ag.pi_e_opt, ag.critics, states, ag.cfg.lambda, rng);
  }
  ag.critics.soft_update(static_cast<Scalar>(ag.cfg.tau));
  ++ag.updates;
}

// One VGDF update: FVP of the source batch, top-xi% selection (or every
// transition during warm-start), filtered critic step, delayed actors.
template <typename Scalar>
UpdateStats vgdf_update(Agent<Scalar>& ag, const Batch<Scalar>& b_tar, const Batch<Scalar>& b_src, bool filtering,
                        SeededRng& rng) {
  UpdateStats st;
  const VgdfConfig& c = ag.cfg;
  const auto n = static_cast<std::size_t>(b_src.size());
  std::vector<double> weights;
  if (ag.model.trained()) {
    auto est = fvp_batch(b_src.s, b_src.a, b_src.s2, ag.model, ag.pi, ag.critics, rng, c.fve_mean_action,
                         c.variance_floor);
    st.fvp_mean = fvp_batch_mean(est);
    st.fvp_log_mean = fvp_batch_log_mean(est);
    if (filtering) {
      SelectionMask mask = select(est, c.xi);
      st.log_mask_matches = select(likelihoods(est), c.xi).flags == mask.flags;
      st.selected_count = mask.selected_count;
      st.filtered = true;
      weights = filtered_weights(mask, n, c.xi);
    }
  }
  if (!st.filtered) {
    weights = mix_weights(n);
    st.selected_count = static_cast<long>(n);
  }
  st.selected_fraction = static_cast<double>(st.selected_count) / static_cast<double>(n);
  CriticLoss loss = source_weighted_critic_step(ag.critics, ag.critic_opt, b_tar, b_src, weights, ag.pi, c.lambda,
                                                c.discount, rng);
  st.critic_loss_tar = loss.target;
  st.critic_loss_src = loss.source;
  actor_step(ag, union_states(b_tar, b_src), rng, st, c.explore);
  return st;
}

// Offline-source update: filtered critic step, then the policy ascends
// beta (min-Q - lambda log pi) over the union batch with beta = alpha / mean|min-Q|,
// minus the squared error to the dataset's actions. No exploration policy.
template <typename Scalar>
UpdateStats vgdf_bc_update(Agent<Scalar>& ag, const Batch<Scalar>& b_tar, const Batch<Scalar>& b_data,
                           SeededRng& rng) {
  UpdateStats st;
  const VgdfConfig& c = ag.cfg;
  const auto n = static_cast<std::size_t>(b_data.size());
  std::vector<double> weights = mix_weights(n);
  st.selected_count = static_cast<long>(n);
  if (ag.model.trained()) {
    auto est = fvp_batch(b_data.s, b_data.a, b_data.s2, ag.model, ag.pi, ag.critics, rng, c.fve_mean_action,
                         c.variance_floor);
    st.fvp_mean = fvp_batch_mean(est);
    st.fvp_log_mean = fvp_batch_log_mean(est);
    SelectionMask mask = select(est, c.xi);
    st.log_mask_matches = select(likelihoods(est), c.xi).flags == mask.flags;
    st.selected_count = mask.selected_count;
    st.filtered = true;
    weights = filtered_weights(mask, n, c.xi);
  }
  st.selected_fraction = static_cast<double>(st.selected_count) / static_cast<double>(n);
  CriticLoss loss = source_weighted_critic_step(ag.critics, ag.critic_opt, b_tar, b_data, weights, ag.pi, c.lambda,
                                                c.discount, rng);
  st.critic_loss_tar = loss.target;
  st.critic_loss_src = loss.source;
  if (ag.updates % c.policy_delay == 0) {
    nn::PolicyLossOptions o;
    o.lambda = c.lambda;
    o.normalize_q = true;
    o.bc_alpha = c.bc_alpha;
    auto rep = nn::policy_update(ag.pi, ag.pi_opt, ag.critics, union_states(b_tar, b_data), o, rng, &b_data.s,
                                 &b_data.a);
    st.policy_entropy = rep.entropy;
  }
  ag.critics.soft_update(static_cast<Scalar>(c.tau));
  ++ag.updates;
  return st;
}

}  // namespace vgdf::algo
