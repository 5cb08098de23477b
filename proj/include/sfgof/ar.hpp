#pragma once

// Goodness-of-fit for the nonlinear autoregression
// X_j = S(theta, X_{j-1}) + e_j with known noise density f.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfgof/inference_kit.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

using RegressionFn = std::function<double(double theta, double x)>;

struct ARModel {
  std::string name;
  RegressionFn regression;
  RegressionFn regression_dtheta;
  // ln f and its derivative.
  std::function<double(double)> noise_logpdf;
  std::function<double(double)> noise_logpdf_d1;
  std::function<double(RngStream&)> noise_sampler;
  // I_f = int f'^2 / f; computed by quadrature over [noise_lo, noise_hi]
  // when empty.
  std::optional<double> noise_fisher;
  double noise_lo = -12.0;
  double noise_hi = 12.0;
  // Closed-form ln phi(theta, x) of the invariant law, if known.
  RegressionFn invariant_logpdf;
  ParamInterval theta_domain{-0.9, 0.9};
  // Support used for the invariant density and the time change.
  double x_lo = -12.0;
  double x_hi = 12.0;
  std::size_t x_points = 2049;
};

// S = theta x, Gaussian noise with standard deviation sigma.
ARModel linear_gaussian_ar(double sigma = 1.0, ParamInterval theta_domain = {-0.9, 0.9});

// S(x) = 0.5 x + 0.3 cos x with the null model's noise.
ARModel cosine_alternative(const ARModel& null_model, double slope = 0.5, double amplitude = 0.3);

// Invariant density on the model grid: closed form when available,
// otherwise a fixed point of the transition kernel.
struct ARDensity {
  double lo = 0.0;
  double dx = 0.0;
  std::vector<double> values;

  double x(std::size_t k) const { return lo + dx * static_cast<double>(k); }
  std::size_t size() const { return values.size(); }
  double at(double x) const;
};

ARDensity ar_invariant_density(const ARModel& model, double theta);

struct SeriesSample {
  std::vector<double> values;
  std::size_t n() const { return values.empty() ? 0 : values.size() - 1; }
};

// X_0 from the invariant law (pass a precomputed density to skip the
// fixed-point solve), then n noise steps.
SeriesSample simulate_ar(const ARModel& model, double theta0, std::size_t n, RngStream& rng,
                         const ARDensity* start = nullptr);

double ar_noise_fisher(const ARModel& model);
// I_theta = int Sdot^2 phi dx.
double ar_regression_fisher(const ARModel& model, double theta);

// Full log-likelihood, including ln phi(theta, X_0).
Estimate mle_ar(const ARModel& model, const SeriesSample& sample);

// U_n(x) = -[I n]^-1/2 sum l'(X_j - S(theta, X_{j-1})) Sdot(theta, X_{j-1}) 1{X_{j-1} <= x}
// as a right-continuous step path over the sorted lag values, with
// tau(x) = int_{-inf}^x Sdot^2 phi / I_theta.
ScorePath score_path_ar(const ARModel& model, const SeriesSample& sample, double theta);

TestOutcome run_test_ar(const ARModel& model, const SeriesSample& sample, double alpha,
                        StatisticKind kind);

}  // namespace sfgof
