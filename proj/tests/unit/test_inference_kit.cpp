#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "sfgof/errors.hpp"
#include "sfgof/inference_kit.hpp"

using namespace sfgof;

TEST(Philox, KnownAnswerZeroCounterZeroKey) {
  const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  // Random123 reference vector.
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(RngStream, SameSeedAndStreamReplays) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStream, DistinctStreamsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 200; ++s) {
    RngStream r(1, s);
    firsts.insert(r());
  }
  EXPECT_EQ(firsts.size(), 200u);
  RngStream a(1, 0), b(2, 0);
  EXPECT_NE(a(), b());
}

TEST(RngStream, UniformIsOpenAndNormalMoments) {
  RngStream r(3, 0);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(RngStream, ExponentialMean) {
  RngStream r(5, 1);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += r.exponential();
  EXPECT_NEAR(s / n, 1.0, 4.0 / std::sqrt(n));
}

TEST(RngStream, DeriveIsDeterministicAndDistinct) {
  RngStream base(9, 4);
  RngStream d1 = base.derive(1), d1b = base.derive(1), d2 = base.derive(2);
  const auto x = d1();
  EXPECT_EQ(x, d1b());
  EXPECT_NE(x, d2());
}

TEST(ParamInterval, RejectsEmptyAndClamps) {
  EXPECT_THROW(ParamInterval(1.0, 1.0), DomainError);
  EXPECT_THROW(ParamInterval(2.0, 1.0), DomainError);
  ParamInterval p(0.0, 1.0);
  EXPECT_FALSE(p.contains(0.0));
  EXPECT_TRUE(p.contains(0.5));
  EXPECT_DOUBLE_EQ(p.clamp(3.0), 1.0);
  EXPECT_TRUE(p.near_boundary(0.999, 0.01));
  EXPECT_FALSE(p.near_boundary(0.5, 0.01));
}

TEST(TimeGrid, PointsAndLookup) {
  TimeGrid g(0.0, 1.0, 10);
  EXPECT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.point(10), 1.0);
  EXPECT_EQ(g.index_at_or_after(0.25), 3u);
  EXPECT_EQ(g.index_at_or_after(0.3), 3u);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 1), DomainError);
  EXPECT_THROW(TimeGrid(1.0, 0.0, 10), DomainError);
}

TEST(Maximize, QuadraticPeak) {
  const double t = maximize_1d([](double x) { return -(x - 0.3) * (x - 0.3); }, {0.0, 1.0}, 1e-8);
  EXPECT_NEAR(t, 0.3, 1e-6);
}

TEST(Maximize, FlatObjectiveReturnsLowestGridPoint) {
  EXPECT_DOUBLE_EQ(maximize_1d([](double) { return 1.0; }, {0.0, 1.0}), 0.0);
}

TEST(Maximize, GlobalMaxAmongSeveralLocalMaxima) {
  auto f = [](double x) { return std::sin(10.0 * x); };
  // Brute-force oracle on 10^6 points; the peaks tie, so keep the first.
  double best = 0.0, best_val = -2.0;
  for (int i = 0; i <= 1000000; ++i) {
    const double x = 2.0 * i / 1e6;
    if (f(x) > best_val + 1e-9) best_val = f(x), best = x;
  }
  const double t = maximize_1d(f, {0.0, 2.0});
  EXPECT_NEAR(t, std::numbers::pi / 20.0, 1e-5);
  EXPECT_NEAR(t, best, 1e-5);
}

TEST(Maximize, NonFiniteObjectiveIsNumericalError) {
  EXPECT_THROW(maximize_1d([](double x) { return x > 0.5 ? std::nan("") : x; }, {0.0, 1.0}), NumericalError);
  EXPECT_THROW(maximize_1d([](double x) { return x; }, {0.0, 1.0}, 0.0), DomainError);
}

TEST(Minimize, QuadraticTrough) {
  EXPECT_NEAR(minimize_1d([](double x) { return (x - 0.7) * (x - 0.7); }, {0.0, 1.0}), 0.7, 1e-6);
}

TEST(Integrate, ConstantAndPolynomial) {
  EXPECT_DOUBLE_EQ(integrate_1d([](double) { return 1.0; }, 0.0, 1.0), 1.0);
  EXPECT_NEAR(integrate_1d([](double x) { return x * x; }, 0.0, 1.0, 100), 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(integrate_1d([](double t) { return std::exp(t); }, 0.0, 1.0), std::numbers::e - 1.0, 1e-8);
  EXPECT_THROW(integrate_1d([](double) { return 1.0; }, 1.0, 0.0), DomainError);
}

TEST(Integrate, SamplesOddAndEvenIntervals) {
  for (int n : {2, 3, 10, 11}) {
    std::vector<double> y(n + 1);
    const double h = 1.0 / n;
    for (int k = 0; k <= n; ++k) y[k] = std::pow(k * h, 3);
    EXPECT_NEAR(integrate_samples(y, h), 0.25, 1e-12) << n;
  }
  std::vector<double> two{1.0, 3.0};
  EXPECT_DOUBLE_EQ(integrate_samples(two, 0.5), 1.0);
}

TEST(Integrate, CumulativeSimpsonMatchesAntiderivative) {
  const int n = 101;
  const double h = 2.0 / (n - 1);
  std::vector<double> y(n);
  for (int k = 0; k < n; ++k) y[k] = std::cos(k * h);
  const auto c = cumulative_simpson(y, h);
  const auto t = cumulative_trapezoid(y, h);
  EXPECT_EQ(c.front(), 0.0);
  for (int k = 0; k < n; ++k) {
    EXPECT_NEAR(c[k], std::sin(k * h), 1e-7);
    EXPECT_NEAR(t[k], std::sin(k * h), 1e-3);
  }
}

TEST(Ode, ZeroRhsIsConstant) {
  TimeGrid g(0.0, 1.0, 100);
  for (double x : ode_solve([](double, double) { return 0.0; }, 1.0, g)) EXPECT_EQ(x, 1.0);
}

TEST(Ode, LinearGrowthMatchesExponential) {
  TimeGrid g(0.0, 1.0, 10000);
  const auto x = ode_solve([](double, double x) { return 0.5 * x; }, 1.0, g);
  EXPECT_NEAR(x.back(), std::exp(0.5), 1e-9);
  const auto p = ode_solve_prefix([](double, double x) { return 0.5 * x; }, 1.0, g, 5000);
  ASSERT_EQ(p.size(), 5001u);
  EXPECT_NEAR(p.back(), std::exp(0.25), 1e-9);
}

TEST(Ode, PureTimeIntegralMatchesQuadrature) {
  auto s = [](double t) { return std::sin(3.0 * t) + t * t; };
  TimeGrid g(0.0, 2.0, 2000);
  const auto x = ode_solve([&](double t, double) { return s(t); }, 0.0, g);
  EXPECT_NEAR(x.back(), integrate_1d(s, 0.0, 2.0, 2000), 1e-8);
}

TEST(Quantile, Type7) {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_THROW(quantile_sorted(std::vector<double>{}, 0.5), DomainError);
  EXPECT_THROW(quantile_sorted(v, 1.5), DomainError);
}

TEST(Interp, LinearAndClamped) {
  std::vector<double> y{0.0, 10.0, 20.0};
  EXPECT_DOUBLE_EQ(interp_uniform(y, 0.0, 1.0, 0.5), 5.0);
  EXPECT_DOUBLE_EQ(interp_uniform(y, 0.0, 1.0, -3.0), 0.0);
  EXPECT_DOUBLE_EQ(interp_uniform(y, 0.0, 1.0, 9.0), 20.0);
}
