#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/algo/config.hpp"
#include "vgdf/envs/envs.hpp"

namespace vgdf::bench {

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"vgdf",   "mix",       "iw_clip",   "darc",    "value_filter",
                                             "fvp_iw", "dgdf",      "zero_shot", "finetune", "oracle",
                                             "vgdf_bc", "bc_only"};
  return m;
}

// Everything one run depends on. Budgets are counted in environment steps.
struct ExperimentConfig {
  std::string method = "vgdf";
  std::string env = "point_mass";
  std::string shift = "none";
  long source_steps = 0;  // 0: gamma_ratio * target_steps
  long target_steps = 10000;
  long oracle_steps = 100000;
  std::string seeds = "0,1,2,3,4";
  long eval_every = 1000;  // target steps
  long eval_episodes = 10;
  std::string out_dir;
  // Offline variant: dataset from a partially trained source policy.
  long dataset_size = 100000;
  long dataset_policy_steps = 10000;
  std::string dataset_path;
  long bc_steps = 10000;
  double classifier_noise = 1.0;
  algo::VgdfConfig vgdf;

  template <typename F>
  void visit(F&& f) {
    f("method", method);
    f("env", env);
    f("shift", shift);
    f("source_steps", source_steps);
    f("target_steps", target_steps);
    f("oracle_steps", oracle_steps);
    f("seeds", seeds);
    f("eval_every", eval_every);
    f("eval_episodes", eval_episodes);
    f("out_dir", out_dir);
    f("dataset_size", dataset_size);
    f("dataset_policy_steps", dataset_policy_steps);
    f("dataset_path", dataset_path);
    f("bc_steps", bc_steps);
    f("classifier_noise", classifier_noise);
    vgdf.visit(f);
  }

  static ExperimentConfig from(const KeyValues& kv) {
    ExperimentConfig c;
    std::vector<std::string> known;
    c.visit([&](const char* key, auto&) { known.emplace_back(key); });
    for (const auto& [key, value] : kv.values()) {
      bool ok = false;
      for (const auto& k : known) ok = ok || k == key;
      if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
    }
    c.visit(algo::detail::Reader{kv});
    c.validate();
    return c;
  }
  static ExperimentConfig parse(const std::string& text) { return from(KeyValues::parse(text)); }
  static ExperimentConfig load(const std::string& path) { return from(KeyValues::load(path)); }

  // Canonical text: every key, sorted.
  std::string to_text() const {
    KeyValues kv;
    const_cast<ExperimentConfig*>(this)->visit(algo::detail::Writer{kv});
    std::ostringstream os;
    for (const auto& [k, v] : kv.values()) os << k << '=' << v << '\n';
    return os.str();
  }

  // Hash of everything that affects results (the output directory does not).
  std::uint64_t hash() const {
    ExperimentConfig c = *this;
    c.out_dir.clear();
    return fnv1a64(c.to_text());
  }

  long resolved_source_steps() const { return source_steps > 0 ? source_steps : vgdf.gamma_ratio * target_steps; }

  std::vector<std::uint64_t> seed_list() const {
    std::vector<std::uint64_t> out;
    std::stringstream ss(seeds);
    for (std::string tok; std::getline(ss, tok, ',');) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(static_cast<std::uint64_t>(parse_long("seeds", tok)));
    }
    return out;
  }

  envs::ShiftSpec shift_spec() const { return envs::ShiftSpec::parse(shift); }

  void validate() const {
    vgdf.validate();
    bool ok = false;
    for (const auto& m : known_methods()) ok = ok || m == method;
    if (!ok) throw std::invalid_argument("unknown method '" + method + "'");
    envs::make_domain_pair(env, shift_spec());  // throws on bad env/shift
    if (target_steps <= 0) throw std::invalid_argument("target_steps must be positive");
    if (source_steps > 0 && source_steps != vgdf.gamma_ratio * target_steps)
      throw std::invalid_argument("source_steps must equal gamma_ratio * target_steps");
    if (seed_list().empty()) throw std::invalid_argument("seed list is empty");
    if (eval_every <= 0 || eval_episodes <= 0) throw std::invalid_argument("evaluation settings must be positive");
    if (oracle_steps <= 0 || dataset_size <= 0 || bc_steps <= 0 || dataset_policy_steps < 0)
      throw std::invalid_argument("budgets must be positive");
  }
};

}  // namespace vgdf::bench
