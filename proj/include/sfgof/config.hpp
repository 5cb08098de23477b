#pragma once

// JSON experiment configs for the four model families, and the CSV data
// readers used by `sfgof test`.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfgof/ar.hpp"
#include "sfgof/mc_harness.hpp"
#include "sfgof/poisson.hpp"
#include "sfgof/score_path.hpp"

namespace sfgof {

enum class Family { small_noise, ergodic, poisson, ar };
std::string_view to_string(Family family);
Family parse_family(std::string_view text);

struct LoadedConfig {
  Family family = Family::small_noise;
  std::string model_name;
  std::string knob;
  double knob_value = 0.0;
  StatisticKind kind = StatisticKind::cvm;
  Approach approach = Approach::split;
  std::vector<double> alphas{0.05};
  std::size_t replicates = 1000;
  bool has_alternative = false;
  std::string alternative_name;
  // Pretty-printed JSON of the effective config.
  std::string echo;

  // Simulates one data set (under the null or the configured alternative)
  // and runs the test on it.
  std::function<TestOutcome(RngStream&, bool alternative, double alpha)> simulate_and_test;
  // Tests the data file named in the config; empty when there is none.
  std::function<TestOutcome(double alpha)> test_observed;
};

LoadedConfig load_config_text(std::string_view json_text,
                              const std::filesystem::path& base_dir = std::filesystem::path("."));
LoadedConfig load_config_file(const std::filesystem::path& path);

Experiment make_experiment(const LoadedConfig& config, bool alternative, std::uint64_t master_seed,
                           std::size_t threads);

// Rows `period_index,time` with 1-based period indices; a header row is
// skipped. n defaults to the largest index seen.
PeriodicEvents read_events_csv(const std::filesystem::path& path, double period,
                               std::optional<std::size_t> n = std::nullopt);
// One value per line; a non-numeric first line is taken as a header.
SeriesSample read_series_csv(const std::filesystem::path& path);

}  // namespace sfgof
