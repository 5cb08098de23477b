#include "sfgof/score_path.hpp"

#include <algorithm>
#include <cmath>

namespace sfgof {

void normalize_time_change(std::vector<double>& tau, std::vector<double>* weight) {
  if (tau.empty()) throw ModelError("empty time change");
  for (std::size_t k = 1; k < tau.size(); ++k) tau[k] = std::max(tau[k], tau[k - 1]);
  const double total = tau.back() - tau.front();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ModelError("time change has no positive mass (zero Fisher information along the path)");
  }
  const double start = tau.front();
  for (auto& t : tau) t = std::clamp((t - start) / total, 0.0, 1.0);
  tau.back() = 1.0;
  if (weight) {
    for (auto& w : *weight) w /= total;
  }
}

double value_at(const ScorePath& score, double x) {
  const auto it = std::upper_bound(score.index.begin(), score.index.end(), x);
  if (it == score.index.begin()) return 0.0;
  return score.values[static_cast<std::size_t>(it - score.index.begin()) - 1];
}

double delta_stat(const ScorePath& score, StatisticKind kind) {
  const auto& v = score.values;
  if (kind == StatisticKind::ks) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    sum += 0.5 * (v[k] * v[k] + v[k + 1] * v[k + 1]) * (score.tau[k + 1] - score.tau[k]);
  }
  return sum;
}

std::string_view to_string(Approach approach) {
  switch (approach) {
    case Approach::split: return "split";
    case Approach::ito: return "ito";
    case Approach::smoothed: return "smoothed";
    case Approach::direct: return "direct";
  }
  return "split";
}

Approach parse_approach(std::string_view text) {
  if (text == "split") return Approach::split;
  if (text == "ito") return Approach::ito;
  if (text == "smoothed") return Approach::smoothed;
  if (text == "direct") return Approach::direct;
  throw ConfigError("unknown approach '" + std::string(text) + "'");
}

TestOutcome make_outcome(StatisticKind kind, double statistic, double alpha, Approach approach,
                         Estimate theta_hat, std::optional<Estimate> theta_bar) {
  TestOutcome out;
  out.kind = kind;
  out.statistic = statistic;
  out.alpha = alpha;
  out.critical = standard_critical_value(kind, alpha);
  out.reject = statistic > out.critical.value;
  out.theta_hat = theta_hat;
  out.theta_bar = theta_bar;
  out.approach = approach;
  return out;
}

}  // namespace sfgof
