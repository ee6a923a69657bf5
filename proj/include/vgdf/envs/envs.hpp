#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vgdf/core/rng.hpp"

namespace vgdf::envs {

enum class ShiftKind { None, KinematicClamp, MorphologyParam };

inline std::string to_string(ShiftKind k) {
  switch (k) {
    case ShiftKind::None: return "none";
    case ShiftKind::KinematicClamp: return "kinematic_clamp";
    case ShiftKind::MorphologyParam: return "morphology_param";
  }
  return "?";
}

// How the target domain differs from the source.
struct ShiftSpec {
  ShiftKind kind = ShiftKind::None;
  std::string name = "none";
  // KinematicClamp: action dimension `dim` limited to [low, high].
  int dim = 0;
  double low = -1.0;
  double high = 1.0;
  // MorphologyParam: physical parameter multiplied by `scale`.
  std::string param;
  double scale = 1.0;

  static ShiftSpec none() { return {}; }
  static ShiftSpec clamp(int dim, double low, double high, std::string name = "") {
    ShiftSpec s;
    s.kind = ShiftKind::KinematicClamp;
    s.dim = dim;
    s.low = low;
    s.high = high;
    std::ostringstream os;
    os << "clamp:" << dim << ':' << low << ':' << high;
    s.name = name.empty() ? os.str() : name;
    return s;
  }
  static ShiftSpec morphology(std::string param, double scale, std::string name = "") {
    ShiftSpec s;
    s.kind = ShiftKind::MorphologyParam;
    s.param = std::move(param);
    s.scale = scale;
    std::ostringstream os;
    os << "morph:" << s.param << ':' << scale;
    s.name = name.empty() ? os.str() : name;
    return s;
  }

  // Presets (none, clamp_small, clamp_large, mass3) or explicit
  // "clamp:DIM:LOW:HIGH" / "morph:PARAM:SCALE".
  static ShiftSpec parse(const std::string& text) {
    if (text == "none" || text.empty()) return none();
    if (text == "clamp_small") return clamp(0, -0.5, 1.0, "clamp_small");
    if (text == "clamp_large") return clamp(0, 0.0, 1.0, "clamp_large");
    if (text == "mass3") return morphology("mass", 3.0, "mass3");
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    try {
      if (parts.size() == 4 && parts[0] == "clamp")
        return clamp(std::stoi(parts[1]), std::stod(parts[2]), std::stod(parts[3]));
      if (parts.size() == 3 && parts[0] == "morph") return morphology(parts[1], std::stod(parts[2]));
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument("cannot parse shift '" + text + "'");
  }
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

// Continuous-control environment with actions in [-1, 1]^action_dim and
// rewards in [0, r_max].
class Env {
 public:
  virtual ~Env() = default;
  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual double r_max() const { return 1.0; }
  virtual int horizon() const { return 200; }
  virtual std::vector<double> reset(SeededRng& rng) = 0;
  virtual StepResult step(const std::vector<double>& action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
  virtual void apply(const ShiftSpec& shift) = 0;

  const std::vector<double>& action_low() const { return low_; }
  const std::vector<double>& action_high() const { return high_; }

 protected:
  void init_bounds(int dims) {
    low_.assign(static_cast<std::size_t>(dims), -1.0);
    high_.assign(static_cast<std::size_t>(dims), 1.0);
  }
  // Clip to [-1, 1] then to the (possibly clamped) per-dimension range.
  std::vector<double> bound(const std::vector<double>& a) const {
    if (a.size() != low_.size()) throw std::invalid_argument("action has wrong dimension for " + name());
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::clamp(std::clamp(a[i], -1.0, 1.0), low_[i], high_[i]);
    return out;
  }
  void apply_clamp(const ShiftSpec& s) {
    if (s.dim < 0 || s.dim >= static_cast<int>(low_.size()))
      throw std::invalid_argument("clamp dimension out of range for " + name());
    if (s.low < -1.0 || s.high > 1.0 || s.low > s.high)
      throw std::invalid_argument("clamp bounds must lie inside the source action space [-1, 1]");
    low_[static_cast<std::size_t>(s.dim)] = s.low;
    high_[static_cast<std::size_t>(s.dim)] = s.high;
  }

  std::vector<double> low_, high_;
};

// 2-D point mass in the box [-arena, arena]^2: state (x, y, vx, vy), action =
// acceleration. Hitting a wall stops that velocity component. Two goals: the
// main one pays 1, the side one side_weight. Per goal the score is half
// 1 - distance / box diagonal plus half a Gaussian bump of width goal_radius;
// the reward is the larger score, so it lies in [0, 1] and stopping on a goal
// pays. The main goal lies in -x, so clamping negative x-acceleration makes
// the side goal (+y) the better choice.
class PointMassEnv : public Env {
 public:
  double dt = 0.1;
  double accel = 1.0;
  double mass = 1.0;
  double friction = 0.0;
  double max_speed = 3.0;
  double arena = 2.0;
  double goal_x = -1.5, goal_y = 0.0;
  double side_x = 0.0, side_y = 1.5, side_weight = 0.8;
  double goal_radius = 0.5;
  double start_x = 0.0, start_y = 0.0, start_jitter = 0.2;

  PointMassEnv() { init_bounds(2); }

  std::string name() const override { return "point_mass"; }
  int state_dim() const override { return 4; }
  int action_dim() const override { return 2; }

  std::vector<double> reset(SeededRng& rng) override {
    x_ = {start_x + rng.uniform(-start_jitter, start_jitter), start_y + rng.uniform(-start_jitter, start_jitter), 0.0,
          0.0};
    return x_;
  }

  StepResult step(const std::vector<double>& action) override {
    std::vector<double> a = bound(action);
    for (int i = 0; i < 2; ++i) {
      double& p = x_[static_cast<std::size_t>(i)];
      double& v = x_[static_cast<std::size_t>(i + 2)];
      v += dt * (accel * a[static_cast<std::size_t>(i)] / mass - friction * v);
      v = std::clamp(v, -max_speed, max_speed);
      p += dt * v;
      if (p < -arena || p > arena) {
        p = std::clamp(p, -arena, arena);
        v = 0.0;
      }
    }
    StepResult out;
    out.state = x_;
    out.reward = std::max(score(goal_x, goal_y), side_weight * score(side_x, side_y));
    return out;
  }

  double score(double gx, double gy) const {
    double dist = std::hypot(x_[0] - gx, x_[1] - gy);
    double linear = std::max(0.0, 1.0 - dist / (2.0 * std::sqrt(2.0) * arena));
    double bump = std::exp(-(dist / goal_radius) * (dist / goal_radius));
    return 0.5 * linear + 0.5 * bump;
  }

  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }

  void apply(const ShiftSpec& s) override {
    if (s.kind == ShiftKind::KinematicClamp) apply_clamp(s);
    if (s.kind == ShiftKind::MorphologyParam) {
      if (s.param == "mass") mass *= s.scale;
      else if (s.param == "friction") friction *= s.scale;
      else if (s.param == "accel") accel *= s.scale;
      else throw std::invalid_argument("point mass has no parameter '" + s.param + "'");
    }
  }

 private:
  std::vector<double> x_{0, 0, 0, 0};
};

// Rigid-rod pendulum: theta'' = 3 g / (2 l) sin(theta) + 3 u / (m l^2) - damping * omega.
// Observation (cos theta, sin theta, omega); theta = 0 is upright.
class PendulumEnv : public Env {
 public:
  double dt = 0.05;
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double damping = 0.0;
  double max_torque = 6.0;
  double max_speed = 8.0;

  PendulumEnv() { init_bounds(1); }

  std::string name() const override { return "pendulum"; }
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }

  std::vector<double> reset(SeededRng& rng) override {
    theta_ = rng.uniform(-M_PI, M_PI);
    omega_ = rng.uniform(-1.0, 1.0);
    return observe();
  }

  double angular_acceleration(double theta, double omega, double torque) const {
    return 3.0 * gravity / (2.0 * length) * std::sin(theta) + 3.0 * torque / (mass * length * length) -
           damping * omega;
  }

  double max_cost() const { return M_PI * M_PI + 0.1 * max_speed * max_speed + 0.001 * max_torque * max_torque; }

  StepResult step(const std::vector<double>& action) override {
    double u = bound(action)[0] * max_torque;
    double th = std::remainder(theta_, 2.0 * M_PI);
    double cost = th * th + 0.1 * omega_ * omega_ + 0.001 * u * u;
    omega_ = std::clamp(omega_ + dt * angular_acceleration(theta_, omega_, u), -max_speed, max_speed);
    theta_ += dt * omega_;
    StepResult out;
    out.state = observe();
    out.reward = std::clamp(1.0 - cost / max_cost(), 0.0, 1.0);
    return out;
  }

  std::unique_ptr<Env> clone() const override { return std::make_unique<PendulumEnv>(*this); }

  void apply(const ShiftSpec& s) override {
    if (s.kind == ShiftKind::KinematicClamp) apply_clamp(s);
    if (s.kind == ShiftKind::MorphologyParam) {
      if (s.param == "mass") mass *= s.scale;
      else if (s.param == "length") length *= s.scale;
      else if (s.param == "damping") damping = damping == 0.0 ? s.scale : damping * s.scale;
      else throw std::invalid_argument("pendulum has no parameter '" + s.param + "'");
    }
  }

  double theta() const { return theta_; }
  double omega() const { return omega_; }
  void set_state(double theta, double omega) {
    theta_ = theta;
    omega_ = omega;
  }

 private:
  std::vector<double> observe() const { return {std::cos(theta_), std::sin(theta_), omega_}; }
  double theta_ = 0.0, omega_ = 0.0;
};

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "point_mass") return std::make_unique<PointMassEnv>();
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  throw std::invalid_argument("unknown environment '" + name + "'");
}

// Source is the unmodified environment; target applies the shift.
inline std::pair<std::unique_ptr<Env>, std::unique_ptr<Env>> make_domain_pair(const std::string& name,
                                                                              const ShiftSpec& shift) {
  auto source = make_env(name);
  auto target = source->clone();
  target->apply(shift);
  return {std::move(source), std::move(target)};
}

}  // namespace vgdf::envs
