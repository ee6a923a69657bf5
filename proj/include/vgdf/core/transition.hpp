#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vgdf {

enum class Domain { Source, Target };

inline const char* to_string(Domain d) { return d == Domain::Source ? "source" : "target"; }

inline Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw std::invalid_argument("unknown domain '" + s + "'");
}

// Discrete transitions carry a single index in each of state/action/next_state.
enum class SpaceKind { Continuous, Discrete };

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
  Domain domain = Domain::Source;
  SpaceKind kind = SpaceKind::Continuous;

  static Transition discrete(std::size_t s, std::size_t a, double r, std::size_t s_next, bool terminal,
                             Domain domain) {
    Transition t;
    t.state = {static_cast<double>(s)};
    t.action = {static_cast<double>(a)};
    t.reward = r;
    t.next_state = {static_cast<double>(s_next)};
    t.terminal = terminal;
    t.domain = domain;
    t.kind = SpaceKind::Discrete;
    return t;
  }

  std::size_t state_index() const { return static_cast<std::size_t>(state.at(0)); }
  std::size_t action_index() const { return static_cast<std::size_t>(action.at(0)); }
  std::size_t next_state_index() const { return static_cast<std::size_t>(next_state.at(0)); }
};

}  // namespace vgdf
