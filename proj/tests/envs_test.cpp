#include <gtest/gtest.h>

#include <cmath>

#include "vgdf/envs/envs.hpp"

using namespace vgdf;
using namespace vgdf::envs;

namespace {

std::vector<std::vector<double>> trajectory(Env& env, std::uint64_t seed, int steps) {
  SeededRng rng(seed), act(seed + 1);
  std::vector<std::vector<double>> out{env.reset(rng)};
  for (int t = 0; t < steps; ++t) {
    std::vector<double> a(static_cast<std::size_t>(env.action_dim()));
    for (double& v : a) v = act.uniform(-1.0, 1.0);
    StepResult r = env.step(a);
    out.push_back(r.state);
    out.back().push_back(r.reward);
  }
  return out;
}

}  // namespace

TEST(Shift, NoneGivesIdenticalDomains) {
  for (std::string name : {"point_mass", "pendulum"}) {
    auto pair = make_domain_pair(name, ShiftSpec::none());
    EXPECT_EQ(trajectory(*pair.first, 5, 300), trajectory(*pair.second, 5, 300)) << name;
  }
}

TEST(Shift, ParsePresetsAndExplicitForms) {
  EXPECT_EQ(ShiftSpec::parse("none").kind, ShiftKind::None);
  ShiftSpec s = ShiftSpec::parse("clamp_large");
  EXPECT_EQ(s.kind, ShiftKind::KinematicClamp);
  EXPECT_EQ(s.dim, 0);
  EXPECT_EQ(s.low, 0.0);
  EXPECT_EQ(s.high, 1.0);
  EXPECT_EQ(ShiftSpec::parse("clamp_small").low, -0.5);
  ShiftSpec c = ShiftSpec::parse("clamp:1:-0.25:0.5");
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.low, -0.25);
  EXPECT_EQ(c.high, 0.5);
  ShiftSpec m = ShiftSpec::parse("morph:length:1.5");
  EXPECT_EQ(m.kind, ShiftKind::MorphologyParam);
  EXPECT_EQ(m.param, "length");
  EXPECT_EQ(m.scale, 1.5);
  EXPECT_EQ(ShiftSpec::parse("mass3").scale, 3.0);
  EXPECT_THROW(ShiftSpec::parse("clamp:x:0:1"), std::invalid_argument);
  EXPECT_THROW(ShiftSpec::parse("wobble"), std::invalid_argument);
}

TEST(Shift, InvalidShiftsAreErrors) {
  EXPECT_THROW(make_domain_pair("point_mass", ShiftSpec::clamp(0, -1.5, 1.0)), std::invalid_argument);
  EXPECT_THROW(make_domain_pair("point_mass", ShiftSpec::clamp(2, 0.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(make_domain_pair("pendulum", ShiftSpec::clamp(0, 0.5, 0.2)), std::invalid_argument);
  EXPECT_THROW(make_domain_pair("pendulum", ShiftSpec::morphology("colour", 2.0)), std::invalid_argument);
  EXPECT_THROW(make_env("cartpole"), std::invalid_argument);
}

TEST(Shift, ClampHalvesTheEffectAtTheBound) {
  // Halving dimension 0: full push moves half as far from rest, dimension 1 untouched.
  auto pair = make_domain_pair("point_mass", ShiftSpec::clamp(0, -0.5, 0.5));
  SeededRng r1(3), r2(3);
  auto s0 = pair.first->reset(r1);
  pair.second->reset(r2);
  auto src = pair.first->step({1.0, 1.0}).state, tar = pair.second->step({1.0, 1.0}).state;
  EXPECT_NEAR(tar[2], 0.5 * src[2], 1e-15);
  EXPECT_NEAR(tar[0] - s0[0], 0.5 * (src[0] - s0[0]), 1e-15);
  EXPECT_EQ(tar[3], src[3]);
  EXPECT_EQ(tar[1], src[1]);
  // Inside the bound nothing changes.
  auto src2 = pair.first->step({0.3, -0.2}).state, tar2 = pair.second->step({0.3, -0.2}).state;
  EXPECT_NEAR(tar2[2] - tar[2], src2[2] - src[2], 1e-15);
}

TEST(Shift, PendulumMassTripledClosedForm) {
  auto pair = make_domain_pair("pendulum", ShiftSpec::parse("mass3"));
  auto& src = dynamic_cast<PendulumEnv&>(*pair.first);
  auto& tar = dynamic_cast<PendulumEnv&>(*pair.second);
  const double dt = 0.05, g = 10.0;
  for (double th : {0.3, -1.2, 2.9}) {
    for (double u : {-1.0, 0.4, 1.0}) {
      const double w0 = 0.7;
      src.set_state(th, w0);
      tar.set_state(th, w0);
      src.step({u});
      tar.step({u});
      double w_src = w0 + dt * (1.5 * g * std::sin(th) + 3.0 * 6.0 * u);
      double w_tar = w0 + dt * (1.5 * g * std::sin(th) + 6.0 * u);  // 3 u_max u / (3 m l^2)
      EXPECT_NEAR(src.omega(), w_src, 1e-12);
      EXPECT_NEAR(tar.omega(), w_tar, 1e-12);
      EXPECT_NEAR(tar.theta(), th + dt * w_tar, 1e-12);
    }
  }
}

TEST(Env, RewardsInUnitInterval) {
  for (std::string name : {"point_mass", "pendulum"}) {
    auto env = make_env(name);
    auto tr = trajectory(*env, 9, 2000);
    for (std::size_t t = 1; t < tr.size(); ++t) {
      double r = tr[t].back();
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, env->r_max());
    }
  }
}

TEST(Env, PointMassRewardPeaksAtGoal) {
  PointMassEnv env;
  env.start_x = env.goal_x;
  env.start_y = env.goal_y;
  env.start_jitter = 0.0;
  SeededRng rng(0);
  env.reset(rng);
  EXPECT_NEAR(env.step({0.0, 0.0}).reward, 1.0, 1e-15);
}

TEST(Env, PendulumUprightAtRestIsBest) {
  PendulumEnv env;
  env.set_state(0.0, 0.0);
  EXPECT_NEAR(env.step({0.0}).reward, 1.0, 1e-15);
  env.set_state(M_PI, 0.0);
  EXPECT_NEAR(env.step({0.0}).reward, 1.0 - M_PI * M_PI / (M_PI * M_PI + 6.4 + 0.036), 1e-12);
}

TEST(Env, PointMassWallsStopMotion) {
  PointMassEnv env;
  SeededRng rng(1);
  env.reset(rng);
  std::vector<double> s;
  for (int t = 0; t < 200; ++t) s = env.step({-1.0, -1.0}).state;
  EXPECT_EQ(s[0], -env.arena);
  EXPECT_EQ(s[1], -env.arena);
  EXPECT_LE(std::abs(s[2]), env.dt * env.accel);
}

TEST(Env, CloneIsIndependent) {
  auto env = make_env("point_mass");
  SeededRng rng(2);
  env->reset(rng);
  auto copy = env->clone();
  auto a = env->step({1.0, 0.0}).state;
  auto b = copy->step({1.0, 0.0}).state;
  EXPECT_EQ(a, b);
  env->step({1.0, 0.0});
  EXPECT_NE(env->step({1.0, 0.0}).state, copy->step({1.0, 0.0}).state);
}
