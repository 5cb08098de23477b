#include <gtest/gtest.h>

#include <cmath>

#include "sfgof/errors.hpp"
#include "sfgof/score_path.hpp"

using namespace sfgof;

namespace {

ScorePath uniform_path(std::size_t m, double (*v)(double)) {
  ScorePath p;
  for (std::size_t k = 0; k <= m; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(m);
    p.index.push_back(3.0 * t);
    p.tau.push_back(t);
    p.values.push_back(v(t));
    p.weight.push_back(1.0 / 3.0);
  }
  return p;
}

}  // namespace

TEST(TimeChange, NormalizesAndPinsEnd) {
  std::vector<double> tau{0.0, 0.1, 0.3, 0.3, 0.7};
  std::vector<double> w{1.0, 1.0, 1.0, 0.0, 1.0};
  normalize_time_change(tau, &w);
  EXPECT_EQ(tau.front(), 0.0);
  EXPECT_EQ(tau.back(), 1.0);
  for (std::size_t k = 1; k < tau.size(); ++k) EXPECT_GE(tau[k], tau[k - 1]);
  EXPECT_NEAR(tau[2], 0.3 / 0.7, 1e-15);
  EXPECT_NEAR(w[0], 1.0 / 0.7, 1e-15);
}

TEST(TimeChange, RepairsRoundingDips) {
  std::vector<double> tau{0.0, 0.5, 0.5 - 1e-17, 1.0 + 1e-16};
  normalize_time_change(tau);
  for (std::size_t k = 1; k < tau.size(); ++k) EXPECT_GE(tau[k], tau[k - 1]);
  EXPECT_EQ(tau.back(), 1.0);
}

TEST(TimeChange, ZeroMassIsModelError) {
  std::vector<double> flat{0.0, 0.0, 0.0};
  EXPECT_THROW(normalize_time_change(flat), ModelError);
  std::vector<double> empty;
  EXPECT_THROW(normalize_time_change(empty), ModelError);
}

TEST(ValueAt, RightContinuousAcrossJumps) {
  ScorePath p;
  p.index = {0.0, 1.0, 1.0, 2.0};
  p.values = {0.0, 0.0, 5.0, 5.0};
  p.tau = {0.0, 0.5, 0.5, 1.0};
  EXPECT_EQ(value_at(p, -1.0), 0.0);
  EXPECT_EQ(value_at(p, 0.999), 0.0);
  EXPECT_EQ(value_at(p, 1.0), 5.0);
  EXPECT_EQ(value_at(p, 9.0), 5.0);
}

TEST(DeltaStat, ZeroPath) {
  const ScorePath p = uniform_path(100, [](double) { return 0.0; });
  EXPECT_EQ(delta_stat(p, StatisticKind::cvm), 0.0);
  EXPECT_EQ(delta_stat(p, StatisticKind::ks), 0.0);
}

TEST(DeltaStat, ParabolaInTau) {
  const ScorePath p = uniform_path(2000, [](double t) { return t * (1.0 - t); });
  EXPECT_NEAR(delta_stat(p, StatisticKind::cvm), 1.0 / 30.0, 1e-6);
  EXPECT_DOUBLE_EQ(delta_stat(p, StatisticKind::ks), 0.25);
}

TEST(DeltaStat, NonUniformTimeChangeMatchesBridgeFunctional) {
  // V(t) = B(tau(t)) with tau(t) = t^2: the statistic only sees tau.
  RngStream rng(21, 0);
  const std::size_t m = 512;
  const BridgePath b = simulate_bridge(m, rng);
  ScorePath p;
  for (std::size_t k = 0; k <= m; ++k) {
    p.tau.push_back(b.tau(k));
    p.index.push_back(std::sqrt(b.tau(k)));
    p.values.push_back(b.values[k]);
  }
  EXPECT_NEAR(delta_stat(p, StatisticKind::cvm), bridge_functional(b, StatisticKind::cvm), 1e-12);
  EXPECT_DOUBLE_EQ(delta_stat(p, StatisticKind::ks), bridge_functional(b, StatisticKind::ks));
}

TEST(DeltaStat, StepFunctionIntegratesExactly) {
  // V = 1 on [0, 0.4), 2 on [0.4, 1]: int V^2 dtau = 0.4 + 4 * 0.6.
  ScorePath p;
  p.index = {0.0, 0.4, 0.4, 1.0};
  p.tau = {0.0, 0.4, 0.4, 1.0};
  p.values = {1.0, 1.0, 2.0, 2.0};
  EXPECT_NEAR(delta_stat(p, StatisticKind::cvm), 2.8, 1e-15);
}

TEST(Approach, RoundTrip) {
  for (Approach a : {Approach::split, Approach::ito, Approach::smoothed, Approach::direct}) {
    EXPECT_EQ(parse_approach(to_string(a)), a);
  }
  EXPECT_THROW(parse_approach("bogus"), ConfigError);
}

TEST(Outcome, RejectsAboveCritical) {
  const TestOutcome lo = make_outcome(StatisticKind::ks, 1.0, 0.05, Approach::split, {0.5, false}, std::nullopt);
  const TestOutcome hi = make_outcome(StatisticKind::ks, 2.0, 0.05, Approach::split, {0.5, false}, Estimate{0.4, true});
  EXPECT_FALSE(lo.reject);
  EXPECT_TRUE(hi.reject);
  EXPECT_NEAR(hi.critical.value, 1.3581, 1e-3);
  ASSERT_TRUE(hi.theta_bar.has_value());
  EXPECT_TRUE(hi.theta_bar->at_boundary);
}
