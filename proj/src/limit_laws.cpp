#include "sfgof/limit_laws.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <utility>

namespace sfgof {

std::string_view to_string(StatisticKind kind) { return kind == StatisticKind::cvm ? "cvm" : "ks"; }

std::string_view to_string(CriticalMethod method) {
  return method == CriticalMethod::series ? "series" : "mc";
}

StatisticKind parse_statistic_kind(std::string_view text) {
  if (text == "cvm") return StatisticKind::cvm;
  if (text == "ks") return StatisticKind::ks;
  throw ConfigError("unknown statistic kind '" + std::string(text) + "' (expected cvm|ks)");
}

CriticalMethod parse_critical_method(std::string_view text) {
  if (text == "series") return CriticalMethod::series;
  if (text == "mc" || text == "monte-carlo") return CriticalMethod::monte_carlo;
  throw ConfigError("unknown critical-value method '" + std::string(text) + "' (expected series|mc)");
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 1), got " << alpha;
    throw DomainError(os.str());
  }
}

}  // namespace

BridgePath simulate_bridge(std::size_t m, RngStream& rng) {
  if (m < 2) throw DomainError("bridge needs at least 2 intervals");
  BridgePath path;
  path.values.assign(m + 1, 0.0);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  double w = 0.0;
  for (std::size_t k = 1; k <= m; ++k) {
    w += sd * rng.normal();
    path.values[k] = w;
  }
  const double w1 = path.values[m];
  for (std::size_t k = 1; k < m; ++k) path.values[k] -= path.tau(k) * w1;
  path.values[m] = 0.0;
  return path;
}

double bridge_functional(const BridgePath& path, StatisticKind kind) {
  const auto& v = path.values;
  if (kind == StatisticKind::ks) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) sum += 0.5 * (v[k] * v[k] + v[k + 1] * v[k + 1]);
  return sum / static_cast<double>(path.intervals());
}

double sample_bridge_sup_abs(std::size_t m, RngStream& rng) {
  const BridgePath path = simulate_bridge(m, rng);
  const double h = 1.0 / static_cast<double>(m);
  double sup = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = path.values[k];
    const double b = path.values[k + 1];
    const double d2 = (a - b) * (a - b);
    // P(max > y | a, b) = exp(-2 (y - a)(y - b) / h) for y >= max(a, b).
    const double hi = 0.5 * (a + b + std::sqrt(d2 - 2.0 * h * std::log(rng.uniform())));
    const double lo = 0.5 * (a + b - std::sqrt(d2 - 2.0 * h * std::log(rng.uniform())));
    sup = std::max(sup, std::max(hi, -lo));
  }
  return sup;
}

double sample_cvm_series(std::size_t terms, RngStream& rng) {
  double sum = 0.0;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (std::size_t k = 1; k <= terms; ++k) {
    const double z = rng.normal();
    sum += z * z / (static_cast<double>(k * k) * pi2);
  }
  return sum;
}

double kolmogorov_survival(double x, int terms) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

CriticalValue empirical_critical_value(std::vector<double>& sample, double alpha, StatisticKind kind,
                                       CriticalMethod method) {
  check_alpha(alpha);
  std::sort(sample.begin(), sample.end());
  const double p = 1.0 - alpha;
  const double n = static_cast<double>(sample.size());
  CriticalValue cv;
  cv.kind = kind;
  cv.alpha = alpha;
  cv.method = method;
  cv.value = quantile_sorted(sample, p);
  // Sparsity 1/f(q_p) by a symmetric difference of neighbouring quantiles.
  const double delta = 0.5 * std::min({p, 1.0 - p, std::cbrt(1.0 / n)});
  const double sparsity =
      (quantile_sorted(sample, p + delta) - quantile_sorted(sample, p - delta)) / (2.0 * delta);
  cv.mc_error = std::sqrt(p * (1.0 - p) / n) * sparsity;
  return cv;
}

CriticalValue critical_value_cvm(double alpha, CriticalMethod method, RngStream& rng,
                                 const CvmCriticalOptions& options) {
  check_alpha(alpha);
  if (options.replicates < 100) throw DomainError("critical value needs at least 100 replicates");
  std::vector<double> draws(options.replicates);
  if (method == CriticalMethod::series) {
    for (auto& d : draws) d = sample_cvm_series(options.series_terms, rng);
  } else {
    for (auto& d : draws) d = bridge_functional(simulate_bridge(options.bridge_steps, rng), StatisticKind::cvm);
  }
  return empirical_critical_value(draws, alpha, StatisticKind::cvm, method);
}

CriticalValue critical_value_ks(double alpha) {
  check_alpha(alpha);
  double lo = 0.0;
  double hi = 10.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_survival(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  CriticalValue cv;
  cv.kind = StatisticKind::ks;
  cv.alpha = alpha;
  cv.value = 0.5 * (lo + hi);
  cv.method = CriticalMethod::series;
  cv.mc_error = 0.0;
  return cv;
}

CriticalValue critical_value_ks_mc(double alpha, RngStream& rng, std::size_t replicates,
                                   std::size_t bridge_steps) {
  check_alpha(alpha);
  std::vector<double> draws(replicates);
  for (auto& d : draws) d = sample_bridge_sup_abs(bridge_steps, rng);
  return empirical_critical_value(draws, alpha, StatisticKind::ks, CriticalMethod::monte_carlo);
}

std::vector<double> sample_limit_law(StatisticKind kind, std::size_t count, RngStream& rng) {
  std::vector<double> draws(count);
  if (kind == StatisticKind::cvm) {
    for (auto& d : draws) d = sample_cvm_series(200, rng);
  } else {
    for (auto& d : draws) d = sample_bridge_sup_abs(200, rng);
  }
  std::sort(draws.begin(), draws.end());
  return draws;
}

const CriticalValue& standard_critical_value(StatisticKind kind, double alpha) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, CriticalValue> cache;
  check_alpha(alpha);
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(static_cast<int>(kind), alpha);
  auto it = cache.find(key);
  if (it == cache.end()) {
    CriticalValue cv;
    if (kind == StatisticKind::ks) {
      cv = critical_value_ks(alpha);
    } else {
      RngStream rng(0x5F3759DF20140101ull, 0);
      cv = critical_value_cvm(alpha, CriticalMethod::series, rng, {.replicates = 1000000});
    }
    it = cache.emplace(key, cv).first;
  }
  return it->second;
}

double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("Kolmogorov distance of an empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace sfgof
