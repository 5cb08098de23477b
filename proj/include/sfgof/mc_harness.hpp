#pragma once

// Replicated size / power experiments. Replicate k always draws from
// RngStream(master_seed, k) and results are stored by index, so reports
// do not depend on the number of worker threads.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfgof/limit_laws.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

// One replicate: simulate, estimate, and return the test statistic.
// Throwing NumericalError excludes the replicate.
using ReplicateFn = std::function<double(RngStream&)>;

struct Experiment {
  std::string model;
  std::string knob;  // epsilon | T | n
  double knob_value = 0.0;
  StatisticKind kind = StatisticKind::cvm;
  Approach approach = Approach::split;
  std::size_t replicates = 1000;
  std::vector<double> alphas{0.05};
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;
  ReplicateFn replicate;
  // Free-form description copied into the sidecar.
  std::string config_echo;
};

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct AlphaResult {
  double alpha = 0.05;
  double critical = 0.0;
  std::size_t rejections = 0;
  double rate = 0.0;
  WilsonInterval wilson;
};

struct ExperimentReport {
  std::string model;
  std::string knob;
  double knob_value = 0.0;
  StatisticKind kind = StatisticKind::cvm;
  Approach approach = Approach::split;
  std::size_t replicates = 0;
  std::size_t excluded = 0;
  // Statistics of the retained replicates, in replicate order.
  std::vector<double> statistics;
  std::vector<AlphaResult> alphas;
  // Empirical quantiles at 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99.
  std::vector<double> quantiles;
  // NaN when fewer than 500 statistics were retained.
  double ks_to_oracle = 0.0;
  double wall_seconds = 0.0;
  std::string config_echo;
  std::vector<std::string> exclusion_messages;

  // More than 1% of the replicates were excluded.
  bool exclusions_exceeded() const { return excluded * 100 > replicates; }
};

ExperimentReport run_experiment(const Experiment& experiment);

// Size and power studies differ only in the simulator behind `replicate`.
inline ExperimentReport run_size(const Experiment& experiment) { return run_experiment(experiment); }
inline ExperimentReport run_power(const Experiment& experiment) { return run_experiment(experiment); }

// Kolmogorov distance between the statistics and 10^5 draws of the limit
// law (fixed seed). Needs at least 500 statistics.
double compare_to_oracle(std::span<const double> statistics, StatisticKind kind);

std::string report_csv_header();
// One row per alpha; no timing, so equal inputs give equal bytes.
std::string report_csv_rows(const ExperimentReport& report);
std::string report_sidecar(const ExperimentReport& report);

// Writes <dir>/<stem>.csv and <dir>/<stem>.txt; returns the CSV path.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                   const std::string& stem);

}  // namespace sfgof
