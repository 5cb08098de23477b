#include "sfgof/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sfgof {

namespace {

constexpr double kOutsideMass = 1e-8;

bool at_boundary(const ParamInterval& domain, double theta) {
  return domain.near_boundary(theta, 1e-6 * domain.width());
}

// Unnormalized log density 2 int_0^x S / sigma^2 - 2 ln sigma on a grid.
std::vector<double> log_density(const ErgodicModel& model, double theta, double lo, double hi,
                                std::size_t points) {
  const double dx = (hi - lo) / static_cast<double>(points - 1);
  std::vector<double> ratio(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double x = lo + dx * static_cast<double>(k);
    const double sd = model.diffusion(x);
    if (!(sd > 0.0)) {
      std::ostringstream os;
      os << "diffusion coefficient must be positive, got " << sd << " at x = " << x;
      throw ModelError(os.str());
    }
    ratio[k] = 2.0 * model.drift(theta, x) / (sd * sd);
  }
  auto integral = cumulative_simpson(ratio, dx);
  const double origin = interp_uniform(integral, lo, dx, std::clamp(0.0, lo, hi));
  for (std::size_t k = 0; k < points; ++k) {
    const double x = lo + dx * static_cast<double>(k);
    integral[k] = integral[k] - origin - 2.0 * std::log(model.diffusion(x));
  }
  return integral;
}

struct Mass {
  double total;
  double inside;
};

Mass grid_mass(const std::vector<double>& logf, double lo, double hi, double inner_lo,
               double inner_hi) {
  const double peak = *std::max_element(logf.begin(), logf.end());
  const double dx = (hi - lo) / static_cast<double>(logf.size() - 1);
  std::vector<double> w(logf.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logf[k] - peak);
  Mass m{integrate_samples(w, dx), 0.0};
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double x = lo + dx * static_cast<double>(k);
    if (x < inner_lo || x > inner_hi) w[k] = 0.0;
  }
  m.inside = integrate_samples(w, dx);
  return m;
}

struct MollifierTable {
  static constexpr std::size_t kPoints = 4097;
  std::vector<double> cdf, pdf;
  double h;

  MollifierTable() : cdf(kPoints), pdf(kPoints), h(2.0 / double(kPoints - 1)) {
    for (std::size_t k = 0; k < kPoints; ++k) {
      const double v = -1.0 + h * static_cast<double>(k);
      pdf[k] = std::abs(v) < 1.0 ? std::exp(v * v / (v * v - 1.0)) : 0.0;
    }
    cdf = cumulative_simpson(pdf, h);
    const double a = cdf.back();
    // The single-interval Simpson steps can dip below zero by rounding in
    // the flat tails.
    double run = 0.0;
    for (auto& c : cdf) c = run = std::clamp(c / a, run, 1.0);
    for (auto& p : pdf) p /= a;
    cdf.back() = 1.0;
  }
};

const MollifierTable& mollifier_table() {
  static const MollifierTable table;
  return table;
}

}  // namespace

double mollifier(double z) {
  if (z <= -1.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const auto& t = mollifier_table();
  return interp_uniform(t.cdf, -1.0, t.h, z);
}

double mollifier_derivative(double z) {
  if (z <= -1.0 || z >= 1.0) return 0.0;
  const auto& t = mollifier_table();
  return interp_uniform(t.pdf, -1.0, t.h, z);
}

ErgodicModel ornstein_uhlenbeck(ParamInterval theta_domain) {
  ErgodicModel m;
  m.name = "ou";
  m.drift = [](double theta, double x) { return -theta * x; };
  m.drift_dtheta = [](double, double x) { return -x; };
  m.diffusion = [](double) { return 1.0; };
  m.theta_domain = theta_domain;
  m.second_moment = [](double theta) { return 0.5 / theta; };
  return m;
}

ErgodicModel tanh_alternative(const ErgodicModel& null_model, double amplitude) {
  ErgodicModel m = null_model;
  m.name = "tanh";
  m.drift = [amplitude](double, double x) { return -x + amplitude * std::tanh(x); };
  m.second_moment = nullptr;
  return m;
}

double InvariantDensity::at(double x) const {
  if (x < lo || x > hi) return 0.0;
  return interp_uniform(values, lo, dx, x);
}

InvariantDensity invariant_density(const ErgodicModel& model, double theta) {
  if (!(model.x_lo < model.x_hi)) throw ModelError("state truncation requires x_lo < x_hi");
  if (model.x_points < 9) throw ModelError("state grid needs at least 9 points");
  double lo = model.x_lo, hi = model.x_hi;
  for (int attempt = 0;; ++attempt) {
    const double w = hi - lo;
    const auto wide = log_density(model, theta, lo - w, hi + w, 3 * model.x_points - 2);
    const Mass m = grid_mass(wide, lo - w, hi + w, lo, hi);
    if (!std::isfinite(m.total) || !(m.total > 0.0)) {
      std::ostringstream os;
      os << "invariant density normalizer is not finite at theta = " << theta;
      throw ModelError(os.str());
    }
    if (1.0 - m.inside / m.total < kOutsideMass) break;
    if (attempt == 8) throw ModelError("invariant law has too much mass in the tails");
    lo -= 0.5 * w;
    hi += 0.5 * w;
  }

  InvariantDensity d;
  d.lo = lo;
  d.hi = hi;
  d.dx = (hi - lo) / static_cast<double>(model.x_points - 1);
  const auto logf = log_density(model, theta, lo, hi, model.x_points);
  const double peak = *std::max_element(logf.begin(), logf.end());
  d.values.resize(logf.size());
  for (std::size_t k = 0; k < logf.size(); ++k) d.values[k] = std::exp(logf[k] - peak);
  const double mass = integrate_samples(d.values, d.dx);
  d.normalizer = mass * std::exp(peak);
  if (!std::isfinite(d.normalizer) || !(mass > 0.0)) {
    std::ostringstream os;
    os << "invariant density normalizer is not finite at theta = " << theta;
    throw ModelError(os.str());
  }
  for (auto& v : d.values) v /= mass;
  return d;
}

double fisher_ergodic(const ErgodicModel& model, double theta) {
  const InvariantDensity d = invariant_density(model, theta);
  std::vector<double> integrand(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double x = d.x(k);
    const double r = model.drift_dtheta(theta, x) / model.diffusion(x);
    integrand[k] = r * r * d.values[k];
  }
  const double info = integrate_samples(integrand, d.dx);
  if (!(info > 0.0) || !std::isfinite(info)) {
    std::ostringstream os;
    os << "Fisher information is not positive at theta = " << theta;
    throw ModelError(os.str());
  }
  return info;
}

ErgodicPath simulate_ergodic(const ErgodicModel& model, double theta0, double horizon, double step,
                             RngStream& rng) {
  if (!model.theta_domain.contains(theta0)) throw DomainError("theta0 outside the parameter interval");
  if (!(step > 0.0 && step <= 1e-2)) throw DomainError("ergodic simulation needs 0 < step <= 0.01");
  if (!(horizon >= 100.0 * step)) throw DomainError("horizon must cover at least 100 steps");
  const auto n = static_cast<std::size_t>(std::llround(horizon / step));
  ErgodicPath path{TimeGrid(0.0, horizon, n), std::vector<double>(n + 1)};
  const double h = path.grid.step();
  const double sqrt_h = std::sqrt(h);

  // Stationary start by inverse CDF on the density grid.
  const InvariantDensity d = invariant_density(model, theta0);
  const auto cdf = cumulative_trapezoid(d.values, d.dx);
  const double u = rng.uniform() * cdf.back();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  std::size_t k = static_cast<std::size_t>(it - cdf.begin());
  k = std::clamp<std::size_t>(k, 1, cdf.size() - 1);
  const double span = cdf[k] - cdf[k - 1];
  const double frac = span > 0.0 ? (u - cdf[k - 1]) / span : 0.5;
  double x = d.x(k - 1) + frac * d.dx;

  const double centre = 0.5 * (d.lo + d.hi);
  const double limit = 10.0 * (d.hi - d.lo);
  path.values[0] = x;
  for (std::size_t i = 0; i < n; ++i) {
    x += model.drift(theta0, x) * h + model.diffusion(x) * sqrt_h * rng.normal();
    if (!std::isfinite(x) || std::abs(x - centre) > limit) {
      std::ostringstream os;
      os << "ergodic path left the state range at t = " << path.grid.point(i + 1);
      throw NumericalError(os.str());
    }
    path.values[i + 1] = x;
  }
  return path;
}

Estimate mle_ergodic(const ErgodicModel& model, const ErgodicPath& path) {
  const std::size_t n = path.grid.num_steps();
  const double h = path.grid.step();
  std::vector<double> inv_var(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = model.diffusion(path.values[i]);
    inv_var[i] = 1.0 / (sd * sd);
  }
  auto loglik = [&](double theta) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = model.drift(theta, path.values[i]);
      sum += (s * (path.values[i + 1] - path.values[i]) - 0.5 * s * s * h) * inv_var[i];
    }
    return sum;
  };
  const double theta = maximize_1d(loglik, model.theta_domain);
  return {theta, at_boundary(model.theta_domain, theta)};
}

Estimate preliminary_moments(const ErgodicModel& model, const ErgodicPath& path,
                             std::optional<double> window_T) {
  const double horizon = path.grid.end() - path.grid.start();
  const double window = window_T.value_or(std::sqrt(horizon));
  if (!(window > 0.0 && window <= horizon)) throw DomainError("moment window must lie in (0, T]");
  const std::size_t steps = std::max<std::size_t>(1, path.grid.index_at_or_after(path.grid.start() + window));
  double empirical = 0.0;
  for (std::size_t i = 0; i < steps; ++i) empirical += path.values[i] * path.values[i];
  empirical /= static_cast<double>(steps);

  auto moment = [&](double theta) {
    if (model.second_moment) return model.second_moment(theta);
    const InvariantDensity d = invariant_density(model, theta);
    std::vector<double> integrand(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) integrand[k] = d.x(k) * d.x(k) * d.values[k];
    return integrate_samples(integrand, d.dx);
  };

  const ParamInterval& dom = model.theta_domain;
  constexpr int kChecks = 33;
  std::vector<double> m(kChecks);
  for (int i = 0; i < kChecks; ++i) m[i] = moment(dom.lower() + dom.width() * i / (kChecks - 1));
  const bool increasing = m.back() > m.front();
  for (int i = 1; i < kChecks; ++i) {
    if (increasing ? !(m[i] > m[i - 1]) : !(m[i] < m[i - 1])) {
      throw ModelError("second-moment map is not strictly monotone on the parameter interval");
    }
  }
  const double m_lo = std::min(m.front(), m.back());
  const double m_hi = std::max(m.front(), m.back());
  if (empirical <= m_lo || empirical >= m_hi) {
    const bool toward_lower = (empirical <= m_lo) == increasing;
    return {toward_lower ? dom.lower() : dom.upper(), true};
  }
  double a = dom.lower(), b = dom.upper();
  for (int it = 0; it < 100 && b - a > 1e-12 * dom.width(); ++it) {
    const double mid = 0.5 * (a + b);
    if ((moment(mid) < empirical) == increasing) {
      a = mid;
    } else {
      b = mid;
    }
  }
  const double theta = 0.5 * (a + b);
  return {theta, at_boundary(dom, theta)};
}

namespace {

// tau(x) from the density at theta on the density grid.
void density_time_change(const ErgodicModel& model, const InvariantDensity& d, double theta,
                         ScorePath& out) {
  out.index.resize(d.size());
  out.weight.resize(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double x = d.x(k);
    const double sd = model.diffusion(x);
    const double sdot = model.drift_dtheta(theta, x);
    out.index[k] = x;
    out.weight[k] = sdot * sdot * d.values[k] / (sd * sd);
  }
  out.tau = cumulative_simpson(out.weight, d.dx);
  const double total = out.tau.back();
  normalize_time_change(out.tau, nullptr);
  for (auto& w : out.weight) w /= total;
}

}  // namespace

ScorePath score_path_x_split(const ErgodicModel& model, const ErgodicPath& path, double theta_bar,
                             double theta_hat, double window_T) {
  const double horizon = path.grid.end() - path.grid.start();
  if (!(window_T >= 0.0 && window_T < horizon)) throw DomainError("split window must lie in [0, T)");
  const InvariantDensity d = invariant_density(model, theta_hat);
  ScorePath out;
  density_time_change(model, d, theta_hat, out);

  const std::size_t n = path.grid.num_steps();
  const std::size_t start = path.grid.index_at_or_after(path.grid.start() + window_T);
  const double h = path.grid.step();
  std::vector<double> bins(d.size(), 0.0);
  double q = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    const double x = path.values[i];
    const double sd = model.diffusion(x);
    const double g = model.drift_dtheta(theta_bar, x) / (sd * sd);
    const double c = g * (path.values[i + 1] - x - model.drift(theta_hat, x) * h);
    q += g * g * sd * sd * h;
    // Counted at the first grid level strictly above x; the top level
    // stands for +infinity.
    const double pos = std::floor((x - d.lo) / d.dx) + 1.0;
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, double(d.size() - 1)));
    bins[b] += c;
  }
  if (!(q > 0.0) || !std::isfinite(q)) throw ModelError("observed information is not positive");
  out.values.resize(d.size());
  std::partial_sum(bins.begin(), bins.end(), out.values.begin());
  const double scale = 1.0 / std::sqrt(q);
  for (auto& v : out.values) v *= scale;
  return out;
}

ScorePath score_path_x_smoothed(const ErgodicModel& model, const ErgodicPath& path,
                                double theta_hat, std::optional<double> bandwidth) {
  const double horizon = path.grid.end() - path.grid.start();
  const double bw = bandwidth.value_or(std::pow(horizon, -0.25));
  if (!(bw > 0.0)) throw DomainError("bandwidth must be positive");
  const InvariantDensity d = invariant_density(model, theta_hat);
  if (bw / d.dx < 4.0) {
    std::ostringstream os;
    os << "bandwidth " << bw << " spans fewer than 4 state-grid points (spacing " << d.dx << ")";
    throw ConfigError(os.str());
  }
  ScorePath out;
  density_time_change(model, d, theta_hat, out);

  auto g = [&](double y) {
    const double sd = model.diffusion(y);
    return model.drift_dtheta(theta_hat, y) / (sd * sd);
  };

  // Per-sample coefficients of phi((x - X)/d) and phi'((x - X)/d) / d.
  const std::size_t n = path.grid.num_steps();
  const double h = path.grid.step();
  struct Sample {
    double x, a, b;
  };
  std::vector<Sample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = path.values[i];
    const double dx = path.values[i + 1] - x;
    const double gx = g(x);
    const double step = 1e-5 * std::max(1.0, std::abs(x));
    const double dg = (g(x + step) - g(x - step)) / (2.0 * step);
    // -K term and -1/2 (H_T)''_zz d<X> with the realized increments
    // standing in for sigma^2 dt.
    samples[i].x = x;
    samples[i].a = -gx * model.drift(theta_hat, x) * h - 0.5 * dg * dx * dx;
    samples[i].b = 0.5 * gx * dx * dx / bw;
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& l, const Sample& r) { return l.x < r.x; });
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + samples[i].a;

  const double x_start = path.values.front();
  const double x_end = path.values.back();
  const double info = fisher_ergodic(model, theta_hat);
  const double scale = 1.0 / std::sqrt(horizon * info);
  out.values.resize(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double level = d.x(k);
    auto below = std::lower_bound(samples.begin(), samples.end(), level - bw,
                                  [](const Sample& s, double v) { return s.x < v; });
    double total = prefix[static_cast<std::size_t>(below - samples.begin())];
    for (auto it = below; it != samples.end() && it->x < level + bw; ++it) {
      const double z = (level - it->x) / bw;
      total += it->a * mollifier(z) + it->b * mollifier_derivative(z);
    }
    // H_T(x, X_T) = int_{X_0}^{X_T} g(y) phi((x - y)/d) dy.
    double h_end = 0.0;
    if (x_end != x_start) {
      const double a = std::min(x_start, x_end), b = std::max(x_start, x_end);
      // Only the part of [a, b] below level + bw contributes.
      const double top = std::min(b, level + bw);
      if (top > a) {
        h_end = integrate_1d([&](double y) { return g(y) * mollifier((level - y) / bw); }, a, top, 256);
      }
      if (x_end < x_start) h_end = -h_end;
    }
    out.values[k] = (h_end + total) * scale;
  }
  return out;
}

double occupation_tv_distance(const InvariantDensity& density, const ErgodicPath& path,
                              std::size_t bins) {
  if (bins < 2) throw DomainError("occupation histogram needs at least 2 bins");
  // Cells span the region holding all but 1e-6 of the mass on each side.
  const auto cdf = cumulative_trapezoid(density.values, density.dx);
  const double mass = cdf.back();
  auto level = [&](double p) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), p * mass);
    return density.x(static_cast<std::size_t>(it - cdf.begin()));
  };
  const double lo = level(1e-6), hi = level(1.0 - 1e-6);
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> occupation(bins + 2, 0.0), law(bins + 2, 0.0);
  auto cell = [&](double x) -> std::size_t {
    if (x < lo) return 0;
    if (x >= hi) return bins + 1;
    return 1 + std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
  };
  const std::size_t n = path.grid.num_steps();
  for (std::size_t i = 0; i < n; ++i) occupation[cell(path.values[i])] += 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j <= bins + 1; ++j) {
    const double a = j == 0 ? density.lo : lo + width * static_cast<double>(j - 1);
    const double b = j == bins + 1 ? density.hi : lo + width * static_cast<double>(j);
    if (b > a) law[j] = integrate_1d([&](double x) { return density.at(x); }, a, b, 64) / mass;
  }
  double tv = 0.0;
  for (std::size_t j = 0; j <= bins + 1; ++j) tv += std::abs(occupation[j] - law[j]);
  return 0.5 * tv;
}

TestOutcome run_test_ergodic(const ErgodicModel& model, const ErgodicPath& path, double alpha,
                             Approach approach, StatisticKind kind,
                             const ErgodicTestOptions& options) {
  const Estimate theta_hat = mle_ergodic(model, path);
  const double horizon = path.grid.end() - path.grid.start();
  switch (approach) {
    case Approach::split: {
      const double window = options.window_T.value_or(std::sqrt(horizon));
      const Estimate theta_bar = preliminary_moments(model, path, window);
      const ScorePath v = score_path_x_split(model, path, theta_bar.value, theta_hat.value, window);
      return make_outcome(kind, delta_stat(v, kind), alpha, approach, theta_hat, theta_bar);
    }
    case Approach::smoothed: {
      const ScorePath v = score_path_x_smoothed(model, path, theta_hat.value, options.bandwidth);
      return make_outcome(kind, delta_stat(v, kind), alpha, approach, theta_hat, std::nullopt);
    }
    default: break;
  }
  throw ConfigError("ergodic tests support the split and smoothed approaches");
}

}  // namespace sfgof
