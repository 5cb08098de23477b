#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sfgof/errors.hpp"
#include "sfgof/small_noise.hpp"

using namespace sfgof;

namespace {

constexpr double kTheta0 = 0.5;

SmallNoiseModel linear(std::size_t steps = 10000, double sigma = 1.0) {
  SmallNoiseModel m = linear_small_noise(1.0, sigma, 1.0);
  m.grid_steps = steps;
  return m;
}

// Noise-free trajectory that still carries a positive epsilon for the
// normalizations.
Trajectory noiseless(const SmallNoiseModel& m, double theta, double epsilon) {
  Trajectory t{m.grid(), deterministic_path(m, theta), epsilon, {}};
  return t;
}

// Closed-form MLE of the linear family from left-point sums.
double closed_form_mle(const Trajectory& tr) {
  double num = 0.0, den = 0.0;
  const double h = tr.grid.step();
  for (std::size_t i = 0; i + 1 < tr.values.size(); ++i) {
    num += tr.values[i] * (tr.values[i + 1] - tr.values[i]);
    den += tr.values[i] * tr.values[i] * h;
  }
  return num / den;
}

// Euler path with the noise switched off, consistent with the left-point
// sums used by the score paths.
Trajectory euler_noiseless(const SmallNoiseModel& m, double theta, double epsilon) {
  RngStream rng(0, 0);
  Trajectory t = simulate_sde(m, theta, 0.0, m.grid(), rng);
  t.epsilon = epsilon;
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace

TEST(SimulateSde, ZeroNoiseFollowsOde) {
  const SmallNoiseModel m = linear();
  RngStream rng(1, 0);
  const Trajectory tr = simulate_sde(m, kTheta0, 0.0, m.grid(), rng);
  EXPECT_NEAR(tr.values.back(), std::exp(0.5), 1e-3);
  EXPECT_EQ(tr.wiener_increments.size(), m.grid_steps);
}

TEST(SimulateSde, PureWienerMoments) {
  SmallNoiseModel m = linear(200);
  m.drift = [](double, double, double) { return 0.0; };
  m.x0 = 0.0;
  const double eps = 0.1;
  const int reps = 5000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(2, r);
    const double z = simulate_sde(m, kTheta0, eps, m.grid(), rng).values.back() / eps;
    s += z;
    s2 += z * z;
  }
  const double mean = s / reps;
  EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(1.0 / reps));
  EXPECT_NEAR(s2 / reps - mean * mean, 1.0, 0.05);
}

TEST(SimulateSde, StaysNearDeterministicPath) {
  const SmallNoiseModel m = linear(1000);
  const auto x = deterministic_path(m, kTheta0);
  const double eps = 0.05;
  double total = 0.0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(3, r);
    const Trajectory tr = simulate_sde(m, kTheta0, eps, m.grid(), rng);
    double sup = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sup = std::max(sup, std::abs(tr.values[k] - x[k]));
    total += sup;
  }
  EXPECT_LE(total / reps, 5.0 * eps * std::exp(0.5));
}

TEST(SimulateSde, RejectsBadArguments) {
  const SmallNoiseModel m = linear(100);
  RngStream rng(4, 0);
  EXPECT_THROW(simulate_sde(m, 5.0, 0.1, m.grid(), rng), DomainError);
  EXPECT_THROW(simulate_sde(m, kTheta0, -0.1, m.grid(), rng), DomainError);
  EXPECT_THROW(simulate_sde(m, kTheta0, 1.5, m.grid(), rng), DomainError);
}

TEST(SimulateSde, BlowUpIsNumericalError) {
  SmallNoiseModel m = linear(100);
  m.drift = [](double, double, double x) { return x * x * x * 1e30; };
  RngStream rng(4, 1);
  EXPECT_THROW(simulate_sde(m, kTheta0, 0.1, m.grid(), rng), NumericalError);
}

TEST(Fisher, LinearClosedForm) {
  // x0^2 (e^{2 theta T} - 1) / (2 theta) at theta = 1/2, T = 1.
  EXPECT_NEAR(fisher_small_noise(linear(), kTheta0), std::numbers::e - 1.0, 1e-4);
  EXPECT_NEAR(fisher_small_noise(linear(10000, 2.0), kTheta0), (std::numbers::e - 1.0) / 4.0, 1e-4);
}

TEST(Fisher, ConstantSensitivity) {
  SmallNoiseModel m = linear(1000);
  m.horizon = 2.0;
  m.drift = [](double theta, double, double) { return 3.0 * theta; };
  m.drift_dtheta = [](double, double, double) { return 3.0; };
  EXPECT_DOUBLE_EQ(fisher_small_noise(m, 1.0), 9.0 * 2.0);
  m.drift_dtheta = [](double, double, double) { return 0.0; };
  EXPECT_THROW(fisher_small_noise(m, 1.0), ModelError);
}

TEST(Mle, MatchesClosedForm) {
  const SmallNoiseModel m = linear();
  for (int r = 0; r < 5; ++r) {
    RngStream rng(5, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.02, m.grid(), rng);
    const Estimate e = mle_small_noise(m, tr);
    EXPECT_FALSE(e.at_boundary);
    EXPECT_NEAR(e.value, closed_form_mle(tr), 1e-4);
  }
}

TEST(Mle, ConsistentAsNoiseVanishes) {
  const SmallNoiseModel m = linear();
  RngStream rng(6, 0);
  const Trajectory tr = simulate_sde(m, kTheta0, 1e-4, m.grid(), rng);
  EXPECT_LE(std::abs(mle_small_noise(m, tr).value - kTheta0), 1e-2);
}

TEST(Mle, BoundaryFlagged) {
  const SmallNoiseModel m = linear(1000);
  const Trajectory tr = noiseless(m, 1.49999999, 0.01);
  SmallNoiseModel narrow = m;
  narrow.theta_domain = ParamInterval(0.1, 1.0);
  EXPECT_TRUE(mle_small_noise(narrow, tr).at_boundary);
}

TEST(Mde, NoiselessPathRecoversTheta) {
  const SmallNoiseModel m = linear();
  const Trajectory tr = noiseless(m, kTheta0, 0.0);
  EXPECT_NEAR(mde_preliminary(m, tr).value, kTheta0, 1e-6);
}

TEST(Mde, WindowTooShortIsConfigError) {
  const SmallNoiseModel m = linear(1000);
  const Trajectory tr = noiseless(m, kTheta0, 0.01);
  EXPECT_THROW(mde_preliminary(m, tr, 5.0 * tr.grid.step()), ConfigError);
  EXPECT_THROW(mde_preliminary(m, tr, 2.0), DomainError);
}

TEST(Mde, DefaultWindowHasFloor) {
  const SmallNoiseModel m = linear(1000);
  const Trajectory tr = noiseless(m, kTheta0, 0.001);
  EXPECT_DOUBLE_EQ(default_mde_window(tr), 50.0 * tr.grid.step());
  const Trajectory wide = noiseless(m, kTheta0, 0.5);
  EXPECT_NEAR(default_mde_window(wide), 0.25 * std::log(2.0), 1e-12);
}

TEST(Mde, ConsistentAtSmallNoise) {
  const SmallNoiseModel m = linear(2000);
  int far = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(7, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.01, m.grid(), rng);
    far += std::abs(mde_preliminary(m, tr).value - kTheta0) > 0.2 ? 1 : 0;
  }
  EXPECT_LE(far, reps / 10);
}

TEST(Mde, ErrorShrinksWithNoise) {
  const SmallNoiseModel m = linear(2000);
  double previous = 1e9;
  for (double eps : {0.1, 0.01, 0.001}) {
    std::vector<double> err;
    for (int r = 0; r < 200; ++r) {
      RngStream rng(8, r);
      const Trajectory tr = simulate_sde(m, kTheta0, eps, m.grid(), rng);
      err.push_back(std::abs(mde_preliminary(m, tr).value - kTheta0));
    }
    const double med = median(err);
    EXPECT_LT(med, previous) << eps;
    previous = med;
  }
}

TEST(SplitPath, NoiselessPathGivesZero) {
  const SmallNoiseModel m = linear();
  const Trajectory tr = euler_noiseless(m, kTheta0, 0.01);
  const double nu = default_mde_window(tr);
  const ScorePath v = score_path_split(m, tr, kTheta0, kTheta0, nu);
  for (double x : v.values) EXPECT_NEAR(x, 0.0, 1e-9);
}

TEST(SplitPath, TimeChangeInvariant) {
  const SmallNoiseModel m = linear(2000);
  for (int r = 0; r < 50; ++r) {
    RngStream rng(9, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.05, m.grid(), rng);
    const double nu = default_mde_window(tr);
    const ScorePath v = score_path_split(m, tr, mde_preliminary(m, tr, nu).value, mle_small_noise(m, tr).value, nu);
    ASSERT_EQ(v.tau.back(), 1.0);
    for (std::size_t k = 1; k < v.tau.size(); ++k) ASSERT_GE(v.tau[k], v.tau[k - 1]);
  }
}

TEST(SplitPath, TrueParameterEndpointIsStandardNormal) {
  const SmallNoiseModel m = linear(2000);
  const int reps = 2000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(10, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.02, m.grid(), rng);
    const ScorePath v = score_path_split(m, tr, kTheta0, kTheta0, default_mde_window(tr));
    s += v.values.back();
    s2 += v.values.back() * v.values.back();
  }
  const double mean = s / reps;
  EXPECT_NEAR(s2 / reps - mean * mean, 1.0, 0.1);
}

TEST(SplitPath, ZeroEpsilonIsDomainError) {
  const SmallNoiseModel m = linear(1000);
  const Trajectory tr = noiseless(m, kTheta0, 0.0);
  EXPECT_THROW(score_path_split(m, tr, kTheta0, kTheta0, 0.1), DomainError);
  EXPECT_THROW(score_path_ito(m, tr, kTheta0), DomainError);
}

TEST(ItoPath, AgreesWithDirectIntegral) {
  const SmallNoiseModel m = linear();
  for (int r = 0; r < 10; ++r) {
    RngStream rng(11, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.05, m.grid(), rng);
    const double th = mle_small_noise(m, tr).value;
    const ScorePath a = score_path_ito(m, tr, th);
    const ScorePath b = score_path_direct(m, tr, th);
    ASSERT_EQ(a.size(), b.size());
    double sup = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sup = std::max(sup, std::abs(a.values[k] - b.values[k]));
    EXPECT_LE(sup, 0.05);
  }
}

TEST(ItoPath, NoiselessPathNearZero) {
  const SmallNoiseModel m = linear();
  const Trajectory tr = euler_noiseless(m, kTheta0, 0.01);
  const ScorePath u = score_path_ito(m, tr, kTheta0);
  for (double x : u.values) EXPECT_NEAR(x, 0.0, 1e-2);
}

TEST(ItoPath, EndpointVanishesAtMle) {
  const SmallNoiseModel m = linear();
  for (int r = 0; r < 20; ++r) {
    RngStream rng(12, r);
    const Trajectory tr = simulate_sde(m, kTheta0, 0.02, m.grid(), rng);
    const ScorePath u = score_path_ito(m, tr, mle_small_noise(m, tr).value);
    EXPECT_LE(std::abs(u.values.back()), 0.05);
    EXPECT_EQ(u.tau.back(), 1.0);
    EXPECT_LE(std::abs(u.omitted_term), 0.05);
  }
}

TEST(ItoPath, MissingSpatialDerivativeIsConfigError) {
  SmallNoiseModel m = linear(1000);
  m.drift_dtheta_dx = nullptr;
  const Trajectory tr = noiseless(m, kTheta0, 0.01);
  EXPECT_THROW(score_path_ito(m, tr, kTheta0), ConfigError);
}

TEST(RunTest, DeterministicForSeedAndRejectsSmoothed) {
  const SmallNoiseModel m = linear(2000);
  RngStream a(13, 0), b(13, 0);
  const Trajectory ta = simulate_sde(m, kTheta0, 0.02, m.grid(), a);
  const Trajectory tb = simulate_sde(m, kTheta0, 0.02, m.grid(), b);
  const TestOutcome oa = run_test_small_noise(m, ta, 0.05, Approach::split, StatisticKind::cvm);
  const TestOutcome ob = run_test_small_noise(m, tb, 0.05, Approach::split, StatisticKind::cvm);
  EXPECT_EQ(oa.statistic, ob.statistic);
  EXPECT_EQ(oa.theta_hat.value, ob.theta_hat.value);
  ASSERT_TRUE(oa.theta_bar.has_value());
  EXPECT_THROW(run_test_small_noise(m, ta, 0.05, Approach::smoothed, StatisticKind::cvm), ConfigError);
}

TEST(RunTest, SinAlternativeIsRejected) {
  const SmallNoiseModel m = linear();
  const SmallNoiseModel alt = sin_perturbed_alternative(m, kTheta0);
  int rejected = 0;
  for (int r = 0; r < 20; ++r) {
    RngStream rng(14, r);
    const Trajectory tr = simulate_sde(alt, kTheta0, 0.01, m.grid(), rng);
    rejected += run_test_small_noise(m, tr, 0.05, Approach::split, StatisticKind::cvm).reject ? 1 : 0;
  }
  EXPECT_GE(rejected, 18);
}

TEST(LateLinear, FirstHalfCarriesNoInformation) {
  SmallNoiseModel m = late_linear_small_noise(1.0, 1.0, 1.0, 1.0);
  EXPECT_EQ(m.drift_dtheta(0.7, 0.3, 2.0), 0.0);
  EXPECT_EQ(m.drift_dtheta(0.7, 0.9, 2.0), 2.0);
  const SmallNoiseModel inv = invisible_alternative(m, 0.5);
  // Identical to the family member after T/2.
  EXPECT_DOUBLE_EQ(inv.drift(0.0, 0.8, 1.3), m.drift(0.5, 0.8, 1.3));
  EXPECT_NE(inv.drift(0.0, 0.1, 1.3), m.drift(0.5, 0.1, 1.3));
}
