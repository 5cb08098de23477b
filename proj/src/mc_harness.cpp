#include "sfgof/mc_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace sfgof {

namespace {

constexpr std::size_t kOracleDraws = 100000;
constexpr std::uint64_t kOracleSeed = 0x0DDBA11C0FFEEull;

const std::vector<double>& oracle_sample(StatisticKind kind) {
  static std::mutex mutex;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(static_cast<int>(kind));
  if (it == cache.end()) {
    RngStream rng(kOracleSeed, static_cast<std::uint64_t>(kind));
    it = cache.emplace(static_cast<int>(kind), sample_limit_law(kind, kOracleDraws, rng)).first;
  }
  return it->second;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

struct Slot {
  std::optional<double> value;
  std::string excluded_reason;
  std::exception_ptr failure;
};

}  // namespace

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double compare_to_oracle(std::span<const double> statistics, StatisticKind kind) {
  if (statistics.size() < 500) throw DomainError("oracle comparison needs at least 500 statistics");
  std::vector<double> sorted(statistics.begin(), statistics.end());
  std::sort(sorted.begin(), sorted.end());
  return ks_distance_sorted(sorted, oracle_sample(kind));
}

ExperimentReport run_experiment(const Experiment& ex) {
  if (ex.replicates < 100) throw ConfigError("experiments need at least 100 replicates");
  if (ex.alphas.empty()) throw ConfigError("experiments need at least one alpha");
  for (double a : ex.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("every alpha must lie in (0, 1)");
  }
  if (!ex.replicate) throw ConfigError("experiment has no replicate function");
  // Warm the memoized tables before the workers start.
  for (double a : ex.alphas) standard_critical_value(ex.kind, a);

  const auto start = std::chrono::steady_clock::now();
  std::vector<Slot> slots(ex.replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= ex.replicates) return;
      RngStream rng(ex.master_seed, k);
      try {
        slots[k].value = ex.replicate(rng);
      } catch (const NumericalError& e) {
        slots[k].excluded_reason = e.what();
      } catch (...) {
        slots[k].failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(ex.threads, ex.replicates));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& s : slots) {
    if (s.failure) std::rethrow_exception(s.failure);
  }

  ExperimentReport r;
  r.model = ex.model;
  r.knob = ex.knob;
  r.knob_value = ex.knob_value;
  r.kind = ex.kind;
  r.approach = ex.approach;
  r.replicates = ex.replicates;
  r.config_echo = ex.config_echo;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k].value) {
      r.statistics.push_back(*slots[k].value);
    } else {
      ++r.excluded;
      r.exclusion_messages.push_back("replicate " + std::to_string(k) + ": " + slots[k].excluded_reason);
    }
  }
  const std::size_t kept = r.statistics.size();
  for (double a : ex.alphas) {
    AlphaResult ar;
    ar.alpha = a;
    ar.critical = standard_critical_value(ex.kind, a).value;
    for (double s : r.statistics) ar.rejections += s > ar.critical ? 1 : 0;
    ar.rate = kept ? static_cast<double>(ar.rejections) / static_cast<double>(kept) : 0.0;
    ar.wilson = wilson_interval(ar.rejections, kept);
    r.alphas.push_back(ar);
  }
  if (kept > 0) {
    std::vector<double> sorted = r.statistics;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99}) r.quantiles.push_back(quantile_sorted(sorted, p));
  }
  r.ks_to_oracle = kept >= 500 ? compare_to_oracle(r.statistics, ex.kind)
                               : std::numeric_limits<double>::quiet_NaN();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string report_csv_header() {
  return "model,knob,knob_value,alpha,kind,approach,M,rejections,rate,wilson_lo,wilson_hi,ks_to_oracle,"
         "excluded\n";
}

std::string report_csv_rows(const ExperimentReport& r) {
  std::ostringstream os;
  for (const auto& a : r.alphas) {
    os << r.model << ',' << r.knob << ',' << fmt(r.knob_value) << ',' << fmt(a.alpha) << ','
       << to_string(r.kind) << ',' << to_string(r.approach) << ',' << r.replicates << ','
       << a.rejections << ',' << fmt(a.rate) << ',' << fmt(a.wilson.lo) << ',' << fmt(a.wilson.hi)
       << ',' << fmt(r.ks_to_oracle) << ',' << r.excluded << '\n';
  }
  return os.str();
}

std::string report_sidecar(const ExperimentReport& r) {
  std::ostringstream os;
  os << "model: " << r.model << '\n'
     << r.knob << ": " << fmt(r.knob_value) << '\n'
     << "kind: " << to_string(r.kind) << '\n'
     << "approach: " << to_string(r.approach) << '\n'
     << "replicates: " << r.replicates << '\n'
     << "excluded: " << r.excluded << (r.exclusions_exceeded() ? " (exceeds 1%)" : "") << '\n'
     << "wall_seconds: " << std::fixed << std::setprecision(3) << r.wall_seconds << '\n';
  os.unsetf(std::ios::fixed);
  os << "quantiles (0.1 0.25 0.5 0.75 0.9 0.95 0.99):";
  for (double q : r.quantiles) os << ' ' << fmt(q);
  os << "\nks_to_oracle: " << fmt(r.ks_to_oracle) << '\n';
  for (const auto& a : r.alphas) {
    os << "alpha " << fmt(a.alpha) << ": critical " << fmt(a.critical) << ", rate " << fmt(a.rate)
       << " [" << fmt(a.wilson.lo) << ", " << fmt(a.wilson.hi) << "]\n";
  }
  for (const auto& m : r.exclusion_messages) os << "excluded " << m << '\n';
  os << "config:\n" << r.config_echo << '\n';
  return os.str();
}

std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                   const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / (stem + ".csv");
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + csv.string());
    out << report_csv_header() << report_csv_rows(report);
  }
  const auto txt = dir / (stem + ".txt");
  std::ofstream side(txt, std::ios::binary);
  if (!side) throw ConfigError("cannot write " + txt.string());
  side << report_sidecar(report);
  return csv;
}

}  // namespace sfgof
