#pragma once

// Goodness-of-fit for a tau*-periodic inhomogeneous Poisson process
// observed over n periods.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfgof/inference_kit.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

using IntensityFn = std::function<double(double theta, double t)>;

// lambda(theta, t) = theta h(t) + lambda0.
struct LinearIntensity {
  std::function<double(double)> h;
  double lambda0 = 1.0;
};

struct PoissonModel {
  std::string name;
  IntensityFn intensity;
  IntensityFn intensity_dtheta;
  double period = 1.0;
  ParamInterval theta_domain{0.5, 5.0};
  // Present for the linear family; enables mde_linear_intensity.
  std::optional<LinearIntensity> linear;
};

// h(t) = 1 + 0.5 sin(2 pi t / tau*).
PoissonModel linear_h_poisson(double lambda0 = 1.0, double period = 1.0,
                              ParamInterval theta_domain = {0.5, 5.0});
PoissonModel linear_poisson(LinearIntensity linear, double period, ParamInterval theta_domain,
                            std::string name = "linear");
// lambda(theta, t) = theta (homogeneous).
PoissonModel constant_poisson(ParamInterval theta_domain = {0.1, 10.0}, double period = 1.0);

// theta0 h(t) + lambda0 + jump 1{t > tau*/2}: outside the linear family.
PoissonModel step_alternative(const PoissonModel& linear_model, double theta0, double jump = 0.5);

struct PeriodicEvents {
  double period = 1.0;
  // periods[j] holds the sorted event positions in [0, tau*) of period j+1.
  std::vector<std::vector<double>> periods;

  std::size_t n() const { return periods.size(); }
  std::size_t total() const;
};

PeriodicEvents simulate_periodic_poisson(const PoissonModel& model, double theta0, std::size_t n,
                                         RngStream& rng);

// I(theta) = int_0^tau* lambdadot^2 / lambda dt.
double fisher_poisson(const PoissonModel& model, double theta);

Estimate mle_poisson(const PoissonModel& model, const PeriodicEvents& events);

// floor(sqrt(n)), at least 1.
std::size_t default_preliminary_periods(std::size_t n);

// theta_bar_N = int [Lambda_N(t) - lambda0 t] H(t) dt / int H^2 dt from
// the first N periods, with H(t) = int_0^t h. The event sum is integrated
// exactly; the estimate is clamped into the parameter interval (flagged).
Estimate mde_linear_intensity(const PoissonModel& model, const PeriodicEvents& events,
                              std::optional<std::size_t> N = std::nullopt);

// Same functional applied to a given mean function Lambda_N(t), by
// Simpson quadrature on `grid_points` nodes. Not clamped.
double mde_linear_functional(const LinearIntensity& linear, double period,
                             const std::function<double(double)>& mean_function,
                             std::size_t grid_points = 4097);

// V_n(t) from periods N+1..n: weights lambdadot/lambda at theta_bar
// against dX_j - lambda(theta_hat, s) ds, scaled by [n I(theta_bar)]^-1/2;
// tau(t) = int_0^t lambdadot^2 / lambda at theta_bar over I(theta_bar).
ScorePath score_path_poisson(const PoissonModel& model, const PeriodicEvents& events,
                             double theta_bar, double theta_hat, std::size_t N);

struct PoissonTestOptions {
  std::optional<std::size_t> preliminary_periods;
};

// The MDE uses periods 1..N, the MLE and the score path periods N+1..n.
// Families without a linear form use the MLE of the first N periods as the
// preliminary estimate.
TestOutcome run_test_poisson(const PoissonModel& model, const PeriodicEvents& events, double alpha,
                             StatisticKind kind, const PoissonTestOptions& options = {});

}  // namespace sfgof
