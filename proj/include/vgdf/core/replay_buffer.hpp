#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/core/rng.hpp"
#include "vgdf/core/transition.hpp"

namespace vgdf {

// Fixed-capacity FIFO ring of transitions with uniform sampling (with
// replacement). Dimensions are fixed by the first insertion.
class ReplayBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 1'000'000;

  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }
  bool empty() const { return storage_.empty(); }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  void push(Transition t) {
    if (!shaped_) {
      state_dim_ = t.state.size();
      action_dim_ = t.action.size();
      kind_ = t.kind;
      shaped_ = true;
    } else if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ ||
               t.action.size() != action_dim_ || t.kind != kind_) {
      std::ostringstream msg;
      msg << "transition shape mismatch: buffer expects state_dim=" << state_dim_ << " action_dim=" << action_dim_
          << ", got state_dim=" << t.state.size() << " next_state_dim=" << t.next_state.size()
          << " action_dim=" << t.action.size();
      throw std::invalid_argument(msg.str());
    }
    if (t.next_state.size() != t.state.size())
      throw std::invalid_argument("transition state and next_state dimensions differ");
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
  }

  // i-th oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (i >= storage_.size()) throw std::out_of_range("replay buffer index out of range");
    if (storage_.size() < capacity_) return storage_[i];
    return storage_[(head_ + i) % capacity_];
  }

  std::vector<std::size_t> sample_indices(std::size_t batch, SeededRng& rng) const {
    if (storage_.empty()) throw std::runtime_error("cannot sample from an empty replay buffer; collect warm-up data first");
    if (batch == 0) throw std::invalid_argument("batch size must be at least 1");
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = rng.index(storage_.size());
    return idx;
  }

  std::vector<Transition> sample(std::size_t batch, SeededRng& rng) const {
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i : sample_indices(batch, rng)) out.push_back(at(i));
    return out;
  }

  void clear() {
    storage_.clear();
    head_ = 0;
  }

  // CSV columns: domain, s0.., a0.., r, ns0.., terminal (oldest first).
  void write_csv(std::ostream& os) const {
    os << "domain";
    for (std::size_t i = 0; i < state_dim_; ++i) os << ",s" << i;
    for (std::size_t i = 0; i < action_dim_; ++i) os << ",a" << i;
    os << ",r";
    for (std::size_t i = 0; i < state_dim_; ++i) os << ",ns" << i;
    os << ",terminal\n";
    os.precision(17);
    for (std::size_t k = 0; k < size(); ++k) {
      const Transition& t = at(k);
      os << to_string(t.domain);
      for (double v : t.state) os << ',' << v;
      for (double v : t.action) os << ',' << v;
      os << ',' << t.reward;
      for (double v : t.next_state) os << ',' << v;
      os << ',' << (t.terminal ? 1 : 0) << '\n';
    }
  }

  void save_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os);
  }

  static ReplayBuffer read_csv(std::istream& is, std::size_t capacity = kDefaultCapacity) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty transition CSV");
    std::size_t sd = 0, ad = 0;
    {
      std::stringstream header(line);
      std::string col;
      while (std::getline(header, col, ',')) {
        auto numbered = [&](char prefix) { return col.size() > 1 && col[0] == prefix && std::isdigit(col[1]); };
        if (numbered('s')) ++sd;
        if (numbered('a')) ++ad;
      }
    }
    ReplayBuffer buf(capacity);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string cell;
      Transition t;
      std::getline(row, cell, ',');
      t.domain = domain_from_string(cell);
      auto next = [&]() {
        if (!std::getline(row, cell, ',')) throw std::runtime_error("truncated transition CSV row");
        return std::stod(cell);
      };
      for (std::size_t i = 0; i < sd; ++i) t.state.push_back(next());
      for (std::size_t i = 0; i < ad; ++i) t.action.push_back(next());
      t.reward = next();
      for (std::size_t i = 0; i < sd; ++i) t.next_state.push_back(next());
      t.terminal = next() != 0.0;
      buf.push(std::move(t));
    }
    return buf;
  }

  static ReplayBuffer load_csv(const std::string& path, std::size_t capacity = kDefaultCapacity) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_csv(is, capacity);
  }

  // Flat little-endian binary dump: magic, dims, count, then packed records.
  void save_binary(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    const char magic[8] = {'V', 'G', 'D', 'F', 'B', 'U', 'F', '1'};
    os.write(magic, 8);
    auto put64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto putd = [&](double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    put64(state_dim_);
    put64(action_dim_);
    put64(size());
    for (std::size_t k = 0; k < size(); ++k) {
      const Transition& t = at(k);
      put64(t.domain == Domain::Source ? 0 : 1);
      for (double v : t.state) putd(v);
      for (double v : t.action) putd(v);
      putd(t.reward);
      for (double v : t.next_state) putd(v);
      put64(t.terminal ? 1 : 0);
    }
  }

  static ReplayBuffer load_binary(const std::string& path, std::size_t capacity = kDefaultCapacity) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "VGDFBUF1") throw std::runtime_error(path + " is not a transition dump");
    auto get64 = [&]() {
      std::uint64_t v = 0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      return v;
    };
    auto getd = [&]() {
      double v = 0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      return v;
    };
    std::size_t sd = get64(), ad = get64(), n = get64();
    ReplayBuffer buf(capacity);
    for (std::size_t k = 0; k < n; ++k) {
      Transition t;
      t.domain = get64() == 0 ? Domain::Source : Domain::Target;
      for (std::size_t i = 0; i < sd; ++i) t.state.push_back(getd());
      for (std::size_t i = 0; i < ad; ++i) t.action.push_back(getd());
      t.reward = getd();
      for (std::size_t i = 0; i < sd; ++i) t.next_state.push_back(getd());
      t.terminal = get64() != 0;
      if (!is) throw std::runtime_error("truncated transition dump " + path);
      buf.push(std::move(t));
    }
    return buf;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;
  bool shaped_ = false;
  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  SpaceKind kind_ = SpaceKind::Continuous;
};

}  // namespace vgdf
