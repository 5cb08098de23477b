#pragma once

// Shared numerics: scalar parameter intervals, uniform time grids,
// counter-based random streams, bounded 1-D optimization, Simpson
// quadrature and RK4 integration.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sfgof/errors.hpp"

namespace sfgof {

using ScalarFn = std::function<double(double)>;

// The open parameter set (a, b). Optimizers search the closed interval.
class ParamInterval {
 public:
  ParamInterval(double lower, double upper);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  bool contains(double theta) const { return theta > lower_ && theta < upper_; }
  double clamp(double theta) const;
  // True when theta lies within `tol` of either endpoint.
  bool near_boundary(double theta, double tol) const;

 private:
  double lower_;
  double upper_;
};

// Uniform grid start = t_0 < t_1 < ... < t_n = end.
class TimeGrid {
 public:
  TimeGrid(double start, double end, std::size_t num_steps);

  double start() const { return start_; }
  double end() const { return end_; }
  std::size_t num_steps() const { return num_steps_; }
  std::size_t size() const { return num_steps_ + 1; }
  double step() const { return (end_ - start_) / static_cast<double>(num_steps_); }
  double point(std::size_t k) const;
  // Index of the first grid point >= t (clamped to the grid).
  std::size_t index_at_or_after(double t) const;

 private:
  double start_;
  double end_;
  std::size_t num_steps_;
};

// Philox4x32-10 block function; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based random stream. The pair (master_seed, stream_id) fully
// determines the output sequence, so replicate k of an experiment can be
// generated on any thread without coordination.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent stream keyed by this one and a tag.
  RngStream derive(std::uint64_t tag) const;

 private:
  void refill();

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Argmax of `objective` over the closed interval [a, b]: a coarse grid of
// `grid_points` evaluations, golden-section refinement around every grid
// local maximum, then the lowest candidate whose value is within
// tol * (grid max - grid min) of the best. Throws NumericalError naming theta on a non-finite value.
double maximize_1d(const ScalarFn& objective, const ParamInterval& interval,
                   double tol = 1e-8, int grid_points = 64);
double minimize_1d(const ScalarFn& objective, const ParamInterval& interval,
                   double tol = 1e-8, int grid_points = 64);

// Composite Simpson rule with n_panels (rounded up to even) panels.
double integrate_1d(const ScalarFn& f, double a, double b, int n_panels = 256);

// Simpson quadrature of equally spaced samples; an odd number of
// intervals finishes with the 3/8 rule. Two samples fall back to the
// trapezoid.
double integrate_samples(std::span<const double> y, double h);

// Running integral from the first sample: Simpson over panel pairs with
// the three-point single-interval formula at odd nodes.
std::vector<double> cumulative_simpson(std::span<const double> y, double h);
std::vector<double> cumulative_trapezoid(std::span<const double> y, double h);

using OdeRhs = std::function<double(double t, double x)>;

// Classical RK4 on every grid interval; result[0] == x0.
std::vector<double> ode_solve(const OdeRhs& rhs, double x0, const TimeGrid& grid);
// Same, stopping after `steps` intervals (result has steps + 1 values).
std::vector<double> ode_solve_prefix(const OdeRhs& rhs, double x0, const TimeGrid& grid,
                                     std::size_t steps);

// Type-7 (linear interpolation) quantile of an already sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

// Linear interpolation of tabulated y over a uniform grid on [x0, x0 + h*(n-1)],
// clamped at the ends.
double interp_uniform(std::span<const double> y, double x0, double h, double x);

void require_finite(double value, const char* what, double where);

}  // namespace sfgof
