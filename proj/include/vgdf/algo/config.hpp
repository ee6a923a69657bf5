#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include "vgdf/core/config.hpp"

namespace vgdf::algo {

// Hyperparameters of the filtered actor-critic and its model ensemble.
struct VgdfConfig {
  long gamma_ratio = 10;     // source steps per target step
  double xi = 25.0;          // percentage of each source batch shared
  long batch_size = 128;
  long ensemble_size = 7;
  double lambda = 0.2;       // entropy temperature
  long warm_start = 100000;  // source steps of unfiltered sharing
  double discount = 0.99;
  double tau = 0.005;
  double learning_rate = 3e-4;
  long policy_delay = 2;
  double bc_alpha = 5.0;
  long train_repeat = 10;    // offline variant: updates per target step
  bool explore = true;       // act in the source with the optimistic policy
  bool fve_mean_action = false;
  double variance_floor = 1e-6;
  long hidden_width = 256;
  long hidden_depth = 2;
  long ensemble_width = 200;
  long ensemble_depth = 5;
  long ensemble_batch = 256;
  double ensemble_lr = 3e-4;
  long ensemble_every = 1;   // source steps between model updates
  long random_steps = 1000;  // initial source steps with uniform actions

  template <typename F>
  void visit(F&& f) {
    f("gamma_ratio", gamma_ratio);
    f("xi", xi);
    f("batch_size", batch_size);
    f("ensemble_size", ensemble_size);
    f("lambda", lambda);
    f("warm_start", warm_start);
    f("discount", discount);
    f("tau", tau);
    f("learning_rate", learning_rate);
    f("policy_delay", policy_delay);
    f("bc_alpha", bc_alpha);
    f("train_repeat", train_repeat);
    f("explore", explore);
    f("fve_mean_action", fve_mean_action);
    f("variance_floor", variance_floor);
    f("hidden_width", hidden_width);
    f("hidden_depth", hidden_depth);
    f("ensemble_width", ensemble_width);
    f("ensemble_depth", ensemble_depth);
    f("ensemble_batch", ensemble_batch);
    f("ensemble_lr", ensemble_lr);
    f("ensemble_every", ensemble_every);
    f("random_steps", random_steps);
  }

  // Number of source samples kept per batch once filtering is active.
  long selected_count() const { return std::max(1L, static_cast<long>(static_cast<double>(batch_size) * xi / 100.0)); }

  void validate() const {
    auto positive = [](const char* key, double v) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string("config key '") + key + "' must be positive");
    };
    if (gamma_ratio < 1) throw std::invalid_argument("gamma_ratio must be >= 1");
    if (!(xi > 0.0 && xi <= 100.0)) throw std::invalid_argument("xi must lie in (0, 100]");
    positive("batch_size", static_cast<double>(batch_size));
    positive("ensemble_size", static_cast<double>(ensemble_size));
    positive("lambda", lambda);
    if (warm_start < 0) throw std::invalid_argument("warm_start must be nonnegative");
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
    positive("tau", tau);
    positive("learning_rate", learning_rate);
    positive("policy_delay", static_cast<double>(policy_delay));
    positive("bc_alpha", bc_alpha);
    positive("train_repeat", static_cast<double>(train_repeat));
    positive("variance_floor", variance_floor);
    positive("hidden_width", static_cast<double>(hidden_width));
    positive("hidden_depth", static_cast<double>(hidden_depth));
    positive("ensemble_width", static_cast<double>(ensemble_width));
    positive("ensemble_depth", static_cast<double>(ensemble_depth));
    positive("ensemble_batch", static_cast<double>(ensemble_batch));
    positive("ensemble_lr", ensemble_lr);
    positive("ensemble_every", static_cast<double>(ensemble_every));
    if (random_steps < 0) throw std::invalid_argument("random_steps must be nonnegative");
  }
};

namespace detail {

struct Reader {
  const KeyValues& kv;
  void operator()(const char* key, long& v) const {
    if (kv.has(key)) v = parse_long(key, kv.at(key));
  }
  void operator()(const char* key, double& v) const {
    if (kv.has(key)) v = parse_double(key, kv.at(key));
  }
  void operator()(const char* key, bool& v) const {
    if (kv.has(key)) v = parse_bool(key, kv.at(key));
  }
  void operator()(const char* key, std::string& v) const {
    if (kv.has(key)) v = kv.at(key);
  }
};

struct Writer {
  KeyValues& kv;
  void operator()(const char* key, long v) const { kv.set(key, std::to_string(v)); }
  void operator()(const char* key, double v) const { kv.set(key, format_double(v)); }
  void operator()(const char* key, bool v) const { kv.set(key, v ? "true" : "false"); }
  void operator()(const char* key, const std::string& v) const { kv.set(key, v); }
};

}  // namespace detail

}  // namespace vgdf::algo
