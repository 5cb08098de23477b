#pragma once

// Goodness-of-fit for a stationary ergodic diffusion
// dX_t = S(theta, X_t) dt + sigma(X_t) dW_t observed on [0, T], T -> inf.
// Score processes are indexed by the state level x.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfgof/inference_kit.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

using StateDriftFn = std::function<double(double theta, double x)>;
using StateFn = std::function<double(double x)>;

struct ErgodicModel {
  std::string name;
  StateDriftFn drift;
  StateDriftFn drift_dtheta;
  StateFn diffusion;
  ParamInterval theta_domain{0.25, 4.0};
  // Initial truncation; extended while the mass outside exceeds 1e-8.
  double x_lo = -10.0;
  double x_hi = 10.0;
  std::size_t x_points = 2049;
  // theta -> E_theta[X^2]; computed from the invariant density when empty.
  std::function<double(double)> second_moment;
};

// S = -theta x, sigma = 1.
ErgodicModel ornstein_uhlenbeck(ParamInterval theta_domain = {0.25, 4.0});

// Fixed drift outside the family: S(x) = -x + 0.8 tanh(x), sigma = 1.
ErgodicModel tanh_alternative(const ErgodicModel& null_model, double amplitude = 0.8);

struct InvariantDensity {
  double lo = 0.0;
  double hi = 0.0;
  double dx = 0.0;
  std::vector<double> values;
  double normalizer = 0.0;

  double x(std::size_t k) const { return lo + dx * static_cast<double>(k); }
  std::size_t size() const { return values.size(); }
  double at(double x) const;
};

InvariantDensity invariant_density(const ErgodicModel& model, double theta);

double fisher_ergodic(const ErgodicModel& model, double theta);

struct ErgodicPath {
  TimeGrid grid;
  std::vector<double> values;
};

ErgodicPath simulate_ergodic(const ErgodicModel& model, double theta0, double horizon, double step,
                             RngStream& rng);

Estimate mle_ergodic(const ErgodicModel& model, const ErgodicPath& path);

// Second-moment matching on [0, window_T] (default sqrt(T)).
Estimate preliminary_moments(const ErgodicModel& model, const ErgodicPath& path,
                             std::optional<double> window_T = std::nullopt);

// V(x) from the increments after window_T, with theta_bar in the
// integrand and theta_hat in the compensator. Normalized by the observed
// information of those increments; tau from the invariant density at
// theta_hat.
ScorePath score_path_x_split(const ErgodicModel& model, const ErgodicPath& path, double theta_bar,
                             double theta_hat, double window_T);

// V(x) with the indicator replaced by phi((x - y) / d) and the stochastic
// integral rewritten through the Ito formula. The second-order term is
// integrated against the realized squared increments, which keeps V(top)
// equal to the normalized score at theta_hat. Default d = T^(-1/4).
ScorePath score_path_x_smoothed(const ErgodicModel& model, const ErgodicPath& path,
                                double theta_hat, std::optional<double> bandwidth = std::nullopt);

// phi(z) = a^-1 int_{-1}^z exp(v^2 / (v^2 - 1)) dv on [-1, 1], 0 / 1 outside.
double mollifier(double z);
double mollifier_derivative(double z);

// Total-variation distance between the occupation measure of the path and
// the invariant law, both binned on `bins` equal cells of [lo, hi] where
// the density carries mass.
double occupation_tv_distance(const InvariantDensity& density, const ErgodicPath& path,
                              std::size_t bins = 40);

struct ErgodicTestOptions {
  std::optional<double> window_T;
  std::optional<double> bandwidth;
};

TestOutcome run_test_ergodic(const ErgodicModel& model, const ErgodicPath& path, double alpha,
                             Approach approach, StatisticKind kind,
                             const ErgodicTestOptions& options = {});

}  // namespace sfgof
