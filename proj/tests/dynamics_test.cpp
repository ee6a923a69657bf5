#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "vgdf/dynamics/ensemble.hpp"

namespace vgdf::dynamics {
namespace {

// s' = A s + B a + noise, r = s_0 + noise.
std::vector<Transition> linear_data(int n, double noise, SeededRng& rng) {
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    double s0 = rng.normal(), s1 = rng.normal(), a = rng.uniform(-1, 1);
    Transition t;
    t.state = {s0, s1};
    t.action = {a};
    t.next_state = {0.9 * s0 + 0.1 * s1 + 0.5 * a + noise * rng.normal(),
                    -0.2 * s0 + 0.95 * s1 - 0.3 * a + noise * rng.normal()};
    t.reward = s0 + noise * rng.normal();
    out.push_back(t);
  }
  return out;
}

EnsembleConfig small(int members) {
  EnsembleConfig c;
  c.members = members;
  c.width = 32;
  c.depth = 2;
  c.learning_rate = 1e-3;
  return c;
}

nn::Batch<float> draw(const std::vector<Transition>& data, int n, SeededRng& rng) {
  std::vector<Transition> b;
  for (int i = 0; i < n; ++i) b.push_back(data[rng.index(data.size())]);
  return nn::make_batch<float>(b);
}

TEST(Ensemble, SoftClampStaysInRange) {
  for (double raw : {-1e3, -30.0, -10.0, 0.0, 0.5, 3.0, 1e3}) {
    float lv = DynamicsEnsemble<float>::soft_clamp(static_cast<float>(raw));
    EXPECT_GE(lv, kLogVarMin);
    EXPECT_LE(lv, kLogVarMax);
  }
}

TEST(Ensemble, NllGradientMatchesFiniteDifferences) {
  SeededRng rng(1);
  DynamicsEnsemble<double> ens(2, 1, small(1));
  ens.init(rng);
  auto data = linear_data(200, 0.1, rng);
  for (auto& t : data) ens.observe(t);
  auto b = nn::make_batch<double>(std::vector<Transition>(data.begin(), data.begin() + 6));
  nn::Mat<double> x = ens.inputs(b.s, b.a), y(3, 6);
  y.topRows(2) = b.s2 - b.s;
  y.bottomRows(1) = b.r;
  const auto& net = ens.member(0);
  nn::Vec<double> grad = nn::Vec<double>::Zero(net.n_params());
  ens.nll_gradient(net, x, y, &grad);
  auto loss = [&](const nn::Vec<double>& p) {
    auto tmp = net;
    tmp.params() = p;
    return ens.nll_gradient(tmp, x, y, nullptr);
  };
  std::vector<Eigen::Index> all;
  for (Eigen::Index k = 0; k < net.n_params(); ++k) all.push_back(k);
  auto res = vgdf::testing::check_gradient(loss, net.params(), grad, all, {}, 1e-5);
  EXPECT_LE(res.max_rel_error, 1e-4);
}

TEST(Ensemble, NllDecreasesOnFixedData) {
  SeededRng rng(2);
  DynamicsEnsemble<float> ens(2, 1, small(3));
  ens.init(rng);
  auto data = linear_data(2000, 0.05, rng);
  for (auto& t : data) ens.observe(t);
  auto held = nn::make_batch<float>(data);
  auto mean_nll = [&] {
    auto v = ens.evaluate_nll(held);
    return (v[0] + v[1] + v[2]) / 3.0;
  };
  double prev = mean_nll();
  for (int block = 0; block < 10; ++block) {
    for (int k = 0; k < 100; ++k) ens.train_step(draw(data, 128, rng), rng);
    double cur = mean_nll();
    EXPECT_LE(cur, prev + 0.05 * std::abs(prev)) << "block " << block;
    prev = cur;
  }
}

TEST(Ensemble, ConstantTargetsDriveVarianceDown) {
  SeededRng rng(3);
  DynamicsEnsemble<float> ens(1, 1, small(1));
  ens.init(rng);
  std::vector<Transition> data;
  for (int i = 0; i < 256; ++i) {
    Transition t;
    t.state = {rng.normal()};
    t.action = {rng.uniform(-1, 1)};
    t.next_state = {t.state[0] + 0.25};
    t.reward = 0.5;
    data.push_back(t);
  }
  for (auto& t : data) ens.observe(t);
  auto b = nn::make_batch<float>(data);
  for (int k = 0; k < 3000; ++k) ens.train_step(b, rng);
  auto p = ens.predict(0, b.s, b.a);
  EXPECT_LT(p.log_var.maxCoeff(), -7.0);
  EXPECT_GE(p.log_var.minCoeff(), kLogVarMin);
}

TEST(Ensemble, OneDrawPerMember) {
  SeededRng rng(4);
  EnsembleConfig c = small(7);
  DynamicsEnsemble<float> ens(2, 1, c);
  ens.init(rng);
  auto f = ens.sample_fictitious(nn::Mat<float>::Zero(2, 5), nn::Mat<float>::Zero(1, 5), rng);
  ASSERT_EQ(f.size(), 7u);
  EXPECT_EQ(f[0].next_state.cols(), 5);
}

TEST(Ensemble, SampleMeanMatchesPrediction) {
  SeededRng rng(5);
  DynamicsEnsemble<double> ens(2, 1, small(1));
  ens.init(rng);
  const int n = 10000;
  nn::Mat<double> s = nn::Mat<double>::Constant(2, n, 0.3), a = nn::Mat<double>::Constant(1, n, -0.2);
  auto pred = ens.predict(0, s.leftCols(1), a.leftCols(1));
  auto draws = ens.sample_fictitious(s, a, rng);
  for (int i = 0; i < 2; ++i) {
    double sd = std::exp(0.5 * pred.log_var(i, 0));
    double mean = (draws[0].next_state.row(i).array() - 0.3).mean();
    EXPECT_NEAR(mean, pred.mean(i, 0), 3.0 * sd / 100.0);
  }
  auto means = ens.sample_fictitious(s.leftCols(1), a.leftCols(1), rng, true);
  EXPECT_NEAR(means[0].next_state(0, 0) - 0.3, pred.mean(0, 0), 1e-12);
}

TEST(Ensemble, MembersDisagreeOffData) {
  SeededRng rng(6);
  DynamicsEnsemble<float> ens(2, 1, small(4));
  ens.init(rng);
  auto data = linear_data(30, 0.05, rng);
  for (auto& t : data) ens.observe(t);
  for (int k = 0; k < 300; ++k) ens.train_step(nn::make_batch<float>(data), rng);
  nn::Mat<float> s = nn::Mat<float>::Constant(2, 1, 3.0f), a = nn::Mat<float>::Constant(1, 1, 0.9f);
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j, ++pairs)
      total += (ens.predict(i, s, a).mean - ens.predict(j, s, a).mean).norm();
  EXPECT_GT(total / pairs, 1e-6);
}

TEST(Ensemble, EmptyBatchIsANoOp) {
  SeededRng rng(7);
  DynamicsEnsemble<float> ens(2, 1, small(2));
  ens.init(rng);
  nn::Batch<float> empty;
  empty.s.resize(2, 0);
  auto before = ens.member(0).params();
  ens.train_step(empty, rng);
  EXPECT_TRUE(before == ens.member(0).params());
  EXPECT_FALSE(ens.trained());
}

}  // namespace
}  // namespace vgdf::dynamics
