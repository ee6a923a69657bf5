#pragma once

#include <deque>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgdf/core/tabular_mdp.hpp"

namespace vgdf::tabular {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
  bool operator!=(const Cell& o) const { return !(*this == o); }
};

// y grows downwards, so Up decreases y.
enum class GridAction : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr std::size_t kGridActions = 4;

inline const char* to_string(GridAction a) {
  switch (a) {
    case GridAction::Up: return "up";
    case GridAction::Down: return "down";
    case GridAction::Left: return "left";
    case GridAction::Right: return "right";
  }
  return "?";
}

inline Cell move(Cell c, GridAction a) {
  switch (a) {
    case GridAction::Up: return {c.x, c.y - 1};
    case GridAction::Down: return {c.x, c.y + 1};
    case GridAction::Left: return {c.x - 1, c.y};
    case GridAction::Right: return {c.x + 1, c.y};
  }
  return c;
}

class GridLayout {
 public:
  int width = 0;
  int height = 0;
  std::vector<bool> walls;  // row-major
  Cell start;
  Cell goal;

  // '#' wall, '.' floor, 'S' start, 'G' goal. Cells outside the text are walls.
  static GridLayout parse(std::istream& is) {
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("empty grid layout");
    GridLayout g;
    g.height = static_cast<int>(rows.size());
    for (const auto& r : rows) g.width = std::max(g.width, static_cast<int>(r.size()));
    g.walls.assign(static_cast<std::size_t>(g.width * g.height), true);
    int starts = 0, goals = 0;
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < static_cast<int>(rows[y].size()); ++x) {
        char ch = rows[y][x];
        switch (ch) {
          case '#': break;
          case '.': g.walls[g.index({x, y})] = false; break;
          case 'S': g.walls[g.index({x, y})] = false; g.start = {x, y}; ++starts; break;
          case 'G': g.walls[g.index({x, y})] = false; g.goal = {x, y}; ++goals; break;
          default: {
            std::ostringstream msg;
            msg << "unexpected character '" << ch << "' at row " << y << " column " << x;
            throw std::invalid_argument(msg.str());
          }
        }
      }
    if (starts != 1 || goals != 1) throw std::invalid_argument("layout needs exactly one S and one G");
    g.validate();
    return g;
  }

  static GridLayout load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open layout " + path);
    return parse(in);
  }

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y * width + c.x); }
  Cell cell(std::size_t s) const { return {static_cast<int>(s) % width, static_cast<int>(s) / width}; }
  std::size_t n_cells() const { return static_cast<std::size_t>(width * height); }
  bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_wall(Cell c) const { return !inside(c) || walls[index(c)]; }

  bool same_shape(const GridLayout& o) const { return width == o.width && height == o.height && start == o.start && goal == o.goal; }

  // Deterministic move; bumping into a wall leaves the agent in place.
  Cell step(Cell c, GridAction a) const {
    Cell n = move(c, a);
    return is_wall(n) ? c : n;
  }

  bool reachable(Cell from, Cell to) const {
    std::vector<bool> seen(n_cells(), false);
    std::deque<Cell> frontier{from};
    seen[index(from)] = true;
    while (!frontier.empty()) {
      Cell c = frontier.front();
      frontier.pop_front();
      if (c == to) return true;
      for (std::size_t a = 0; a < kGridActions; ++a) {
        Cell n = step(c, static_cast<GridAction>(a));
        if (!seen[index(n)]) {
          seen[index(n)] = true;
          frontier.push_back(n);
        }
      }
    }
    return false;
  }

  void validate() const {
    if (start == goal) throw std::invalid_argument("start and goal coincide");
    if (is_wall(start) || is_wall(goal)) throw std::invalid_argument("start or goal is a wall");
    if (!reachable(start, goal)) throw std::invalid_argument("goal is not reachable from start");
  }
};

struct GridStep {
  std::size_t state = 0;
  double reward = 0.0;
  bool terminal = false;   // reached the goal
  bool truncated = false;  // hit the episode cap
};

class GridEnv {
 public:
  explicit GridEnv(GridLayout layout, std::size_t max_episode_len = 256)
      : layout_(std::move(layout)), max_len_(max_episode_len) {
    reset();
  }

  const GridLayout& layout() const { return layout_; }
  std::size_t n_states() const { return layout_.n_cells(); }
  std::size_t n_actions() const { return kGridActions; }
  std::size_t max_episode_len() const { return max_len_; }
  std::size_t state() const { return layout_.index(pos_); }
  std::size_t elapsed() const { return t_; }

  std::size_t reset() {
    pos_ = layout_.start;
    t_ = 0;
    return state();
  }

  GridStep step(std::size_t action) {
    if (action >= kGridActions) throw std::invalid_argument("grid action out of range");
    pos_ = layout_.step(pos_, static_cast<GridAction>(action));
    ++t_;
    GridStep out;
    out.state = state();
    out.terminal = pos_ == layout_.goal;
    out.reward = out.terminal ? 1.0 : 0.0;
    out.truncated = !out.terminal && t_ >= max_len_;
    return out;
  }

 private:
  GridLayout layout_;
  std::size_t max_len_;
  Cell pos_;
  std::size_t t_ = 0;
};

// Explicit MDP of a layout: reward 1 on entering the goal, goal absorbing with
// reward 0, start deterministic. Wall cells are unreachable self-loops.
inline TabularMdp to_tabular_mdp(const GridLayout& g, double gamma) {
  TabularMdp m(g.n_cells(), kGridActions, gamma, 1.0);
  for (std::size_t s = 0; s < g.n_cells(); ++s) {
    Cell c = g.cell(s);
    for (std::size_t a = 0; a < kGridActions; ++a) {
      if (c == g.goal || g.is_wall(c)) {
        m.p(s, a, s) = 1.0;
        continue;
      }
      Cell n = g.step(c, static_cast<GridAction>(a));
      m.p(s, a, g.index(n)) = 1.0;
      if (n == g.goal) m.r(s, a) = 1.0;
    }
  }
  std::fill(m.initial_dist.begin(), m.initial_dist.end(), 0.0);
  m.initial_dist[g.index(g.start)] = 1.0;
  return m;
}

}  // namespace vgdf::tabular
