#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sfgof/ar.hpp"
#include "sfgof/errors.hpp"

using namespace sfgof;

namespace {

// Conditional least squares; equals the MLE up to the X_0 term.
double least_squares(const SeriesSample& s) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j < s.values.size(); ++j) {
    num += s.values[j] * s.values[j - 1];
    den += s.values[j - 1] * s.values[j - 1];
  }
  return num / den;
}

// Exact maximizer of the full Gaussian log-likelihood (sigma = 1) by
// Newton iteration from least squares.
double full_likelihood_root(const SeriesSample& s) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t j = 1; j < s.values.size(); ++j) {
    sxy += s.values[j] * s.values[j - 1];
    sxx += s.values[j - 1] * s.values[j - 1];
  }
  const double x0 = s.values.front() * s.values.front();
  double th = sxy / sxx;
  for (int it = 0; it < 50; ++it) {
    const double g = sxy - th * sxx + x0 * th - th / (1.0 - th * th);
    const double dg = -sxx + x0 - (1.0 + th * th) / std::pow(1.0 - th * th, 2);
    th -= g / dg;
  }
  return th;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace

TEST(SimulateAr, StationaryMoments) {
  const ARModel m = linear_gaussian_ar();
  RngStream rng(1, 0);
  const SeriesSample s = simulate_ar(m, 0.5, 100000, rng);
  ASSERT_EQ(s.n(), 100000u);
  double mean = 0.0;
  for (double x : s.values) mean += x;
  mean /= s.values.size();
  double var = 0.0, cov = 0.0;
  for (std::size_t j = 0; j < s.values.size(); ++j) {
    var += (s.values[j] - mean) * (s.values[j] - mean);
    if (j > 0) cov += (s.values[j] - mean) * (s.values[j - 1] - mean);
  }
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var / s.values.size(), 4.0 / 3.0, 0.04);
  EXPECT_NEAR(cov / var, 0.5, 0.01);
}

TEST(SimulateAr, RejectsBadArguments) {
  const ARModel m = linear_gaussian_ar();
  RngStream rng(2, 0);
  EXPECT_THROW(simulate_ar(m, 0.5, 9, rng), DomainError);
  EXPECT_THROW(simulate_ar(m, 0.95, 100, rng), DomainError);
  EXPECT_THROW(linear_gaussian_ar(0.0), DomainError);
}

TEST(Density, NumericFixedPointMatchesClosedForm) {
  ARModel closed = linear_gaussian_ar();
  closed.x_points = 513;
  ARModel numeric = closed;
  numeric.invariant_logpdf = nullptr;
  const ARDensity a = ar_invariant_density(closed, 0.5);
  const ARDensity b = ar_invariant_density(numeric, 0.5);
  ASSERT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
  EXPECT_LT(worst, 1e-4);
  EXPECT_NEAR(a.at(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi * 4.0 / 3.0), 1e-12);
  EXPECT_EQ(a.at(1e3), 0.0);
}

TEST(Density, HeavyTailsAreModelError) {
  ARModel m = linear_gaussian_ar();
  m.noise_logpdf = [](double e) { return -std::log(std::numbers::pi * (1.0 + e * e)); };
  m.invariant_logpdf = nullptr;
  m.x_lo = -12.0;
  m.x_hi = 12.0;
  m.x_points = 257;
  EXPECT_THROW(ar_invariant_density(m, 0.5), ModelError);
}

TEST(Fisher, NoiseQuadratureAndRegression) {
  ARModel m = linear_gaussian_ar(2.0);
  m.noise_fisher.reset();
  EXPECT_NEAR(ar_noise_fisher(m), 0.25, 1e-6);
  for (double th : {-0.6, 0.0, 0.5, 0.8}) {
    EXPECT_NEAR(ar_regression_fisher(m, th), 4.0 / (1.0 - th * th), 1e-6) << th;
  }
}

TEST(MleAr, MatchesFullLikelihoodRootAndLeastSquares) {
  const ARModel m = linear_gaussian_ar();
  const std::size_t n = 2000;
  for (int r = 0; r < 10; ++r) {
    RngStream rng(3, r);
    const SeriesSample s = simulate_ar(m, 0.5, n, rng);
    const Estimate e = mle_ar(m, s);
    EXPECT_FALSE(e.at_boundary);
    EXPECT_NEAR(e.value, full_likelihood_root(s), 1e-6) << r;
    // The X_0 term moves the estimate by O(1/n), scaled by X_0^2.
    const double x0 = s.values.front();
    EXPECT_NEAR(e.value, least_squares(s), (2.0 + x0 * x0) / n) << r;
  }
}

TEST(MleAr, AsymptoticVariance) {
  const ARModel m = linear_gaussian_ar();
  const std::size_t n = 1000;
  const int reps = 500;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(4, r);
    const double z = std::sqrt(double(n)) * (mle_ar(m, simulate_ar(m, 0.5, n, rng)).value - 0.5);
    s += z;
    s2 += z * z;
  }
  const double mean = s / reps;
  EXPECT_NEAR((s2 / reps - mean * mean) / 0.75, 1.0, 0.15);
}

TEST(MleAr, RejectsBadSamples) {
  const ARModel m = linear_gaussian_ar();
  EXPECT_THROW(mle_ar(m, SeriesSample{{1.0}}), DomainError);
  EXPECT_THROW(mle_ar(m, SeriesSample{{1.0, NAN, 0.0}}), DomainError);
}

TEST(ScorePathAr, NoiselessSeriesGivesZeroPath) {
  const ARModel m = linear_gaussian_ar();
  SeriesSample s;
  s.values.push_back(3.0);
  for (int j = 0; j < 30; ++j) s.values.push_back(0.5 * s.values.back());
  const ScorePath u = score_path_ar(m, s, 0.5);
  for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(ScorePathAr, ZeroBelowSmallestLag) {
  const ARModel m = linear_gaussian_ar();
  RngStream rng(5, 0);
  const SeriesSample s = simulate_ar(m, 0.5, 200, rng);
  const ScorePath u = score_path_ar(m, s, 0.5);
  const double min_lag = *std::min_element(s.values.begin(), s.values.end() - 1);
  EXPECT_EQ(value_at(u, min_lag - 1e-9), 0.0);
  EXPECT_EQ(value_at(u, u.index.front()), 0.0);
  EXPECT_EQ(u.tau.front(), 0.0);
  EXPECT_EQ(u.tau.back(), 1.0);
  for (std::size_t k = 1; k < u.tau.size(); ++k) ASSERT_GE(u.tau[k], u.tau[k - 1]);
}

TEST(ScorePathAr, EndpointVarianceAtTrueTheta) {
  const ARModel m = linear_gaussian_ar();
  const ARDensity start = ar_invariant_density(m, 0.5);
  const int reps = 2000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(6, r);
    const double top = score_path_ar(m, simulate_ar(m, 0.5, 500, rng, &start), 0.5).values.back();
    s += top;
    s2 += top * top;
  }
  const double mean = s / reps;
  EXPECT_NEAR(s2 / reps - mean * mean, 1.0, 0.1);
}

TEST(ScorePathAr, EndpointNearZeroAtMle) {
  const ARModel m = linear_gaussian_ar();
  const ARDensity start = ar_invariant_density(m, 0.5);
  std::vector<double> tops;
  for (int r = 0; r < 200; ++r) {
    RngStream rng(7, r);
    const SeriesSample s = simulate_ar(m, 0.5, 1000, rng, &start);
    tops.push_back(std::abs(score_path_ar(m, s, mle_ar(m, s).value).values.back()));
  }
  EXPECT_LE(median(tops), 0.05);
}

TEST(RunTestAr, CosineAlternativeIsRejected) {
  const ARModel m = linear_gaussian_ar();
  const ARModel alt = cosine_alternative(m);
  const ARDensity start = ar_invariant_density(alt, 0.0);
  int rejected = 0;
  for (int r = 0; r < 30; ++r) {
    RngStream rng(8, r);
    const TestOutcome t = run_test_ar(m, simulate_ar(alt, 0.0, 5000, rng, &start), 0.05, StatisticKind::cvm);
    EXPECT_EQ(t.approach, Approach::direct);
    EXPECT_FALSE(t.theta_bar.has_value());
    rejected += t.reject;
  }
  EXPECT_GE(rejected, 27);
}
