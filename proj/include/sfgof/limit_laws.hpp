#pragma once

// Brownian bridge simulation and the two limit functionals used by every
// test in the library:
//   cvm:  Delta  = int_0^1 B(tau)^2 dtau
//   ks:   Delta* = sup_{0<=tau<=1} |B(tau)|

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sfgof/inference_kit.hpp"

namespace sfgof {

enum class StatisticKind { cvm, ks };
enum class CriticalMethod { series, monte_carlo };

std::string_view to_string(StatisticKind kind);
std::string_view to_string(CriticalMethod method);
StatisticKind parse_statistic_kind(std::string_view text);
CriticalMethod parse_critical_method(std::string_view text);

// Bridge sampled on the uniform grid k/m, k = 0..m.
struct BridgePath {
  std::vector<double> values;

  std::size_t intervals() const { return values.size() - 1; }
  double tau(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(intervals()); }
};

struct CriticalValue {
  StatisticKind kind = StatisticKind::cvm;
  double alpha = 0.05;
  double value = 0.0;
  CriticalMethod method = CriticalMethod::series;
  // Standard error of `value` from simulation; 0 for deterministic methods.
  double mc_error = 0.0;
};

// B(k/m) = W(k/m) - (k/m) W(1) from i.i.d. N(0, 1/m) increments.
BridgePath simulate_bridge(std::size_t m, RngStream& rng);

// cvm: trapezoidal integral of B^2; ks: max |B|.
double bridge_functional(const BridgePath& path, StatisticKind kind);

// One draw of sup|B| that also accounts for excursions between grid
// points: conditional on the grid values each interval is an independent
// bridge, whose maximum has a closed-form inverse CDF.
double sample_bridge_sup_abs(std::size_t m, RngStream& rng);

// One draw of the Karhunen-Loeve representation sum_k Z_k^2 / (k pi)^2
// truncated at `terms`.
double sample_cvm_series(std::size_t terms, RngStream& rng);

// P(sup|B| > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x, int terms = 100);

struct CvmCriticalOptions {
  std::size_t replicates = 100000;
  std::size_t bridge_steps = 1000;
  std::size_t series_terms = 200;
};

CriticalValue critical_value_cvm(double alpha, CriticalMethod method, RngStream& rng,
                                 const CvmCriticalOptions& options = {});

// Bisection on the Kolmogorov series (K = 100 terms).
CriticalValue critical_value_ks(double alpha);

// Simulated d_alpha from sample_bridge_sup_abs draws.
CriticalValue critical_value_ks_mc(double alpha, RngStream& rng, std::size_t replicates = 100000,
                                   std::size_t bridge_steps = 200);

// Quantile of a sorted sample with a sparsity-based standard error.
CriticalValue empirical_critical_value(std::vector<double>& sample, double alpha,
                                       StatisticKind kind, CriticalMethod method);

// Sorted draws from the limit law of `kind` (cvm via the series, ks via
// sample_bridge_sup_abs).
std::vector<double> sample_limit_law(StatisticKind kind, std::size_t count, RngStream& rng);

// Process-wide memoized critical values used by the run_test_* entry
// points: series route for cvm (fixed seed, 10^6 draws), Kolmogorov series
// for ks.
const CriticalValue& standard_critical_value(StatisticKind kind, double alpha);

// Two-sample Kolmogorov distance between sorted samples.
double ks_distance_sorted(std::span<const double> a, std::span<const double> b);

}  // namespace sfgof
