#pragma once

// Goodness-of-fit for dX_t = S(theta, t, X_t) dt + eps sigma(t, X_t) dW_t
// observed on [0, T] as eps -> 0.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfgof/inference_kit.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

using DriftFn = std::function<double(double theta, double t, double x)>;
using DiffusionFn = std::function<double(double t, double x)>;

struct SmallNoiseModel {
  std::string name;
  DriftFn drift;
  DriftFn drift_dtheta;
  DiffusionFn diffusion;
  // d/dx of drift_dtheta; required only by the Ito route.
  DriftFn drift_dtheta_dx;
  double x0 = 1.0;
  double horizon = 1.0;
  ParamInterval theta_domain{0.1, 1.5};
  std::size_t grid_steps = 10000;

  TimeGrid grid() const { return TimeGrid(0.0, horizon, grid_steps); }
};

// S = theta x, sigma constant.
SmallNoiseModel linear_small_noise(double x0, double sigma, double horizon,
                                   ParamInterval theta_domain = {0.1, 1.5});

// theta0 x + amplitude sin(2 pi t / T): outside the linear family.
SmallNoiseModel sin_perturbed_alternative(const SmallNoiseModel& null_model, double theta0,
                                          double amplitude = 2.0);

// Drift b x until T/2, then ramps smoothly (over T/10) into theta x. The
// first half carries no information on theta.
SmallNoiseModel late_linear_small_noise(double x0, double sigma, double horizon, double early_rate,
                                        ParamInterval theta_domain = {0.1, 1.5});
// Differs from every member of late_linear only where the family carries
// no information, so a score-based test cannot see it.
SmallNoiseModel invisible_alternative(const SmallNoiseModel& late_linear, double theta_star,
                                      double amplitude = 2.0);

struct Trajectory {
  TimeGrid grid;
  std::vector<double> values;
  double epsilon = 1.0;
  // Driving Wiener increments, kept for replay checks.
  std::vector<double> wiener_increments;
};

Trajectory simulate_sde(const SmallNoiseModel& model, double theta0, double epsilon,
                        const TimeGrid& grid, RngStream& rng);

// Solution x_t(theta) of the noiseless equation on the model grid.
std::vector<double> deterministic_path(const SmallNoiseModel& model, double theta);

double fisher_small_noise(const SmallNoiseModel& model, double theta);

// Maximizer of the discretized log-likelihood (left-point Ito sums).
Estimate mle_small_noise(const SmallNoiseModel& model, const Trajectory& traj);

// eps^2 ln(1/eps) clamped to at least `min_steps` grid steps.
double default_mde_window(const Trajectory& traj, std::size_t min_steps = 50);

// argmin_theta int_0^nu [X_t - x_t(theta)]^2 dt.
Estimate mde_preliminary(const SmallNoiseModel& model, const Trajectory& traj,
                         std::optional<double> nu_epsilon = std::nullopt);

// V(t) on [nu, T] with the preliminary estimate in the stochastic
// integrand and the MLE in the compensator.
ScorePath score_path_split(const SmallNoiseModel& model, const Trajectory& traj, double theta_bar,
                           double theta_hat, double nu_epsilon);

// U(t) on [0, T] by the Ito formula applied to
// H(theta, s, x) = int_{x0}^x Sdot / sigma^2 dy.
ScorePath score_path_ito(const SmallNoiseModel& model, const Trajectory& traj, double theta_hat);

// Directly defined stochastic-integral version at a fixed theta. Only
// meaningful when Sdot does not depend on theta (or theta is not data
// dependent); used as an oracle.
ScorePath score_path_direct(const SmallNoiseModel& model, const Trajectory& traj, double theta);

TestOutcome run_test_small_noise(const SmallNoiseModel& model, const Trajectory& traj,
                                 double alpha, Approach approach, StatisticKind kind);

}  // namespace sfgof
