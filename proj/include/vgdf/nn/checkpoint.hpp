#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/nn/mlp.hpp"

namespace vgdf::nn {

inline constexpr char kCheckpointMagic[8] = {'V', 'G', 'D', 'F', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// A named array: network weights (sizes = layer widths, activation set) or a
// plain vector (activation empty).
struct CheckpointEntry {
  std::string name;
  std::string activation;
  std::vector<std::int64_t> sizes;
  std::vector<double> values;
};

// Binary layout: magic, u32 version, u64-length config text, u32 entry count,
// then per entry: name, activation, sizes, values (lengths as u32/u64
// prefixes, little-endian host order, doubles as IEEE-754).
struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry& get(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw std::runtime_error("checkpoint has no entry '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return true;
    return false;
  }

  template <typename Scalar>
  void add_network(const std::string& name, const Mlp<Scalar>& net) {
    CheckpointEntry e;
    e.name = name;
    e.activation = to_string(net.hidden_activation());
    for (int s : net.sizes()) e.sizes.push_back(s);
    e.values.resize(static_cast<std::size_t>(net.n_params()));
    for (Eigen::Index i = 0; i < net.n_params(); ++i) e.values[static_cast<std::size_t>(i)] = static_cast<double>(net.params()(i));
    entries.push_back(std::move(e));
  }

  template <typename Scalar>
  void add_vector(const std::string& name, const Vec<Scalar>& v) {
    CheckpointEntry e;
    e.name = name;
    e.sizes = {static_cast<std::int64_t>(v.size())};
    for (Eigen::Index i = 0; i < v.size(); ++i) e.values.push_back(static_cast<double>(v(i)));
    entries.push_back(std::move(e));
  }

  template <typename Scalar>
  Mlp<Scalar> network(const std::string& name) const {
    const CheckpointEntry& e = get(name);
    if (e.activation.empty()) throw std::runtime_error("checkpoint entry '" + name + "' is not a network");
    std::vector<int> sizes(e.sizes.begin(), e.sizes.end());
    Mlp<Scalar> net(sizes, activation_from_string(e.activation));
    if (static_cast<std::size_t>(net.n_params()) != e.values.size())
      throw std::runtime_error("checkpoint entry '" + name + "' has the wrong parameter count");
    for (Eigen::Index i = 0; i < net.n_params(); ++i) net.params()(i) = static_cast<Scalar>(e.values[static_cast<std::size_t>(i)]);
    return net;
  }

  template <typename Scalar>
  Vec<Scalar> vector(const std::string& name) const {
    const CheckpointEntry& e = get(name);
    Vec<Scalar> v(static_cast<Eigen::Index>(e.values.size()));
    for (std::size_t i = 0; i < e.values.size(); ++i) v(static_cast<Eigen::Index>(i)) = static_cast<Scalar>(e.values[i]);
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto put64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto put_str = [&](const std::string& s) {
      put32(static_cast<std::uint32_t>(s.size()));
      out.write(s.data(), static_cast<std::streamsize>(s.size()));
    };
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put32(kCheckpointVersion);
    put64(config_text.size());
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    put32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
      put_str(e.name);
      put_str(e.activation);
      put32(static_cast<std::uint32_t>(e.sizes.size()));
      for (auto s : e.sizes) put64(static_cast<std::uint64_t>(s));
      put64(e.values.size());
      out.write(reinterpret_cast<const char*>(e.values.data()), static_cast<std::streamsize>(e.values.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    auto fail = [&](const char* what) { throw std::runtime_error(std::string("corrupt checkpoint ") + path + ": " + what); };
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) fail("bad magic");
    auto get32 = [&]() {
      std::uint32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) fail("truncated");
      return v;
    };
    auto get64 = [&]() {
      std::uint64_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) fail("truncated");
      return v;
    };
    auto get_str = [&](std::uint64_t n) {
      if (n > (1ULL << 32)) fail("oversized string");
      std::string s(n, '\0');
      in.read(s.data(), static_cast<std::streamsize>(n));
      if (!in) fail("truncated");
      return s;
    };
    if (get32() != kCheckpointVersion) fail("unsupported version");
    Checkpoint c;
    c.config_text = get_str(get64());
    std::uint32_t n = get32();
    for (std::uint32_t k = 0; k < n; ++k) {
      CheckpointEntry e;
      e.name = get_str(get32());
      e.activation = get_str(get32());
      std::uint32_t ns = get32();
      for (std::uint32_t i = 0; i < ns; ++i) e.sizes.push_back(static_cast<std::int64_t>(get64()));
      std::uint64_t nv = get64();
      if (nv > (1ULL << 31)) fail("oversized entry");
      e.values.resize(nv);
      in.read(reinterpret_cast<char*>(e.values.data()), static_cast<std::streamsize>(nv * sizeof(double)));
      if (!in) fail("truncated");
      c.entries.push_back(std::move(e));
    }
    return c;
  }
};

}  // namespace vgdf::nn
