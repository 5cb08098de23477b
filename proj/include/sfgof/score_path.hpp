#pragma once

// Types shared by the four model pipelines: the evaluated score-function
// process with its time change, estimator results, and test outcomes.

#include <optional>
#include <string>
#include <vector>

#include "sfgof/limit_laws.hpp"

namespace sfgof {

// A score-function process sampled at increasing index points (times for
// diffusions and Poisson processes, state levels for the ergodic and AR
// models). Jumps are encoded as two consecutive points with the same index
// and the same tau, so a trapezoid in tau integrates step functions
// exactly.
struct ScorePath {
  std::vector<double> index;
  std::vector<double> values;
  // Time change, nondecreasing, tau.back() == 1 exactly.
  std::vector<double> tau;
  // d tau / d index at each point (zero at duplicated jump points).
  std::vector<double> weight;
  // Normalized size of any term the construction drops (Ito route only).
  double omitted_term = 0.0;

  std::size_t size() const { return values.size(); }
};

// Divides a nonnegative running integral by its final value, enforcing
// monotonicity against rounding, and pins the last element to 1.
// Throws ModelError when the total is not positive.
void normalize_time_change(std::vector<double>& tau, std::vector<double>* weight = nullptr);

// Right-continuous lookup: the value at the last point whose index is
// <= x (0 before the first point).
double value_at(const ScorePath& score, double x);

// cvm: trapezoid of V^2 against d tau; ks: max |V|.
double delta_stat(const ScorePath& score, StatisticKind kind);

struct Estimate {
  double value = 0.0;
  // The optimizer stopped within tolerance of an end of the parameter
  // interval, or a moment/MDE inversion fell outside its range.
  bool at_boundary = false;
};

enum class Approach { split, ito, smoothed, direct };
std::string_view to_string(Approach approach);
Approach parse_approach(std::string_view text);

struct TestOutcome {
  StatisticKind kind = StatisticKind::cvm;
  double statistic = 0.0;
  CriticalValue critical;
  double alpha = 0.05;
  bool reject = false;
  Estimate theta_hat;
  std::optional<Estimate> theta_bar;
  Approach approach = Approach::split;
};

TestOutcome make_outcome(StatisticKind kind, double statistic, double alpha, Approach approach,
                         Estimate theta_hat, std::optional<Estimate> theta_bar);

}  // namespace sfgof
