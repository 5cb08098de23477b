#include "sfgof/ar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sfgof {

namespace {

bool at_boundary(const ParamInterval& domain, double theta) {
  return domain.near_boundary(theta, 1e-6 * domain.width());
}

ARDensity numeric_density(const ARModel& model, double theta) {
  ARDensity d;
  const std::size_t m = model.x_points;
  d.lo = model.x_lo;
  d.dx = (model.x_hi - model.x_lo) / static_cast<double>(m - 1);
  // Kernel matrix f(y_i - S(theta, x_k)) with trapezoid weights in x.
  std::vector<double> kernel(m * m);
  for (std::size_t k = 0; k < m; ++k) {
    const double mean = model.regression(theta, d.x(k));
    const double w = (k == 0 || k + 1 == m) ? 0.5 * d.dx : d.dx;
    for (std::size_t i = 0; i < m; ++i) kernel[i * m + k] = w * std::exp(model.noise_logpdf(d.x(i) - mean));
  }
  std::vector<double> cur(m), next(m);
  for (std::size_t i = 0; i < m; ++i) cur[i] = std::exp(model.noise_logpdf(d.x(i)));
  auto normalize = [&](std::vector<double>& v) {
    const double mass = integrate_samples(v, d.dx);
    if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericalError("invariant density iteration lost its mass");
    for (auto& x : v) x /= mass;
  };
  normalize(cur);
  for (int it = 0; it < 20000; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      const double* row = &kernel[i * m];
      for (std::size_t k = 0; k < m; ++k) sum += row[k] * cur[k];
      next[i] = sum;
    }
    normalize(next);
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) change += std::abs(next[i] - cur[i]);
    cur.swap(next);
    if (change * d.dx < 1e-10) {
      d.values = std::move(cur);
      return d;
    }
  }
  throw NumericalError("invariant density iteration did not converge");
}

void check_tails(const ARDensity& d) {
  double peak = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) peak = std::max(peak, d.values[k] * d.x(k) * d.x(k));
  const double left = d.values.front() * d.x(0) * d.x(0);
  const double right = d.values.back() * d.x(d.size() - 1) * d.x(d.size() - 1);
  if (std::max(left, right) > 1e-3 * peak) {
    throw ModelError("invariant density tails are too heavy for the truncation grid");
  }
}

double log_invariant(const ARModel& model, double theta, double x) {
  if (model.invariant_logpdf) return model.invariant_logpdf(theta, x);
  const double f = ar_invariant_density(model, theta).at(x);
  return std::log(std::max(f, 1e-300));
}

}  // namespace

double ARDensity::at(double x) const {
  const double hi = lo + dx * static_cast<double>(values.size() - 1);
  if (x < lo || x > hi) return 0.0;
  return interp_uniform(values, lo, dx, x);
}

ARModel linear_gaussian_ar(double sigma, ParamInterval theta_domain) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  ARModel m;
  m.name = "linear-gaussian";
  m.regression = [](double theta, double x) { return theta * x; };
  m.regression_dtheta = [](double, double x) { return x; };
  const double log_norm = std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  m.noise_logpdf = [sigma, log_norm](double e) { return -0.5 * e * e / (sigma * sigma) - log_norm; };
  m.noise_logpdf_d1 = [sigma](double e) { return -e / (sigma * sigma); };
  m.noise_sampler = [sigma](RngStream& rng) { return sigma * rng.normal(); };
  m.noise_fisher = 1.0 / (sigma * sigma);
  m.noise_lo = -12.0 * sigma;
  m.noise_hi = 12.0 * sigma;
  m.invariant_logpdf = [sigma](double theta, double x) {
    const double var = sigma * sigma / (1.0 - theta * theta);
    return -0.5 * x * x / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
  };
  m.theta_domain = theta_domain;
  const double reach = std::max(std::abs(theta_domain.lower()), std::abs(theta_domain.upper()));
  const double sd_max = sigma / std::sqrt(std::max(1.0 - reach * reach, 1e-6));
  m.x_lo = -12.0 * sd_max;
  m.x_hi = 12.0 * sd_max;
  return m;
}

ARModel cosine_alternative(const ARModel& null_model, double slope, double amplitude) {
  ARModel m = null_model;
  m.name = "cosine";
  m.regression = [slope, amplitude](double, double x) { return slope * x + amplitude * std::cos(x); };
  m.regression_dtheta = [](double, double) { return 0.0; };
  m.invariant_logpdf = nullptr;
  return m;
}

ARDensity ar_invariant_density(const ARModel& model, double theta) {
  if (!(model.x_lo < model.x_hi) || model.x_points < 9) throw ModelError("invalid AR state grid");
  ARDensity d;
  if (model.invariant_logpdf) {
    d.lo = model.x_lo;
    d.dx = (model.x_hi - model.x_lo) / static_cast<double>(model.x_points - 1);
    d.values.resize(model.x_points);
    for (std::size_t k = 0; k < d.size(); ++k) d.values[k] = std::exp(model.invariant_logpdf(theta, d.x(k)));
  } else {
    d = numeric_density(model, theta);
  }
  check_tails(d);
  return d;
}

SeriesSample simulate_ar(const ARModel& model, double theta0, std::size_t n, RngStream& rng,
                         const ARDensity* start) {
  if (n < 10) throw DomainError("AR simulation needs n >= 10");
  if (!model.theta_domain.contains(theta0)) throw DomainError("theta0 outside the parameter interval");
  ARDensity own;
  if (!start) {
    own = ar_invariant_density(model, theta0);
    start = &own;
  }
  const auto cdf = cumulative_trapezoid(start->values, start->dx);
  const double u = rng.uniform() * cdf.back();
  std::size_t k = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  k = std::clamp<std::size_t>(k, 1, cdf.size() - 1);
  const double span = cdf[k] - cdf[k - 1];
  double x = start->x(k - 1) + (span > 0.0 ? (u - cdf[k - 1]) / span : 0.5) * start->dx;

  SeriesSample s;
  s.values.resize(n + 1);
  s.values[0] = x;
  for (std::size_t j = 1; j <= n; ++j) {
    x = model.regression(theta0, x) + model.noise_sampler(rng);
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "AR state is not finite at step " << j;
      throw NumericalError(os.str());
    }
    s.values[j] = x;
  }
  return s;
}

double ar_noise_fisher(const ARModel& model) {
  if (model.noise_fisher) return *model.noise_fisher;
  const double info = integrate_1d(
      [&](double e) {
        const double d = model.noise_logpdf_d1(e);
        return d * d * std::exp(model.noise_logpdf(e));
      },
      model.noise_lo, model.noise_hi, 4096);
  if (!(info > 0.0) || !std::isfinite(info)) throw ModelError("noise Fisher information is not positive");
  return info;
}

double ar_regression_fisher(const ARModel& model, double theta) {
  const ARDensity d = ar_invariant_density(model, theta);
  std::vector<double> integrand(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double s = model.regression_dtheta(theta, d.x(k));
    integrand[k] = s * s * d.values[k];
  }
  const double info = integrate_samples(integrand, d.dx);
  if (!(info > 0.0) || !std::isfinite(info)) {
    std::ostringstream os;
    os << "regression Fisher information is not positive at theta = " << theta;
    throw ModelError(os.str());
  }
  return info;
}

Estimate mle_ar(const ARModel& model, const SeriesSample& sample) {
  if (sample.values.size() < 2) throw DomainError("AR sample needs at least two values");
  for (double v : sample.values) {
    if (!std::isfinite(v)) throw DomainError("AR sample contains a non-finite value");
  }
  const auto& x = sample.values;
  auto loglik = [&](double theta) {
    double sum = log_invariant(model, theta, x[0]);
    for (std::size_t j = 1; j < x.size(); ++j) sum += model.noise_logpdf(x[j] - model.regression(theta, x[j - 1]));
    return sum;
  };
  const double theta = maximize_1d(loglik, model.theta_domain);
  return {theta, at_boundary(model.theta_domain, theta)};
}

ScorePath score_path_ar(const ARModel& model, const SeriesSample& sample, double theta) {
  const std::size_t n = sample.n();
  if (n < 1) throw DomainError("AR sample needs at least two values");
  const ARDensity d = ar_invariant_density(model, theta);
  std::vector<double> density(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double s = model.regression_dtheta(theta, d.x(k));
    density[k] = s * s * d.values[k];
  }
  const auto cum = cumulative_simpson(density, d.dx);
  const double info_theta = cum.back();
  if (!(info_theta > 0.0) || !std::isfinite(info_theta)) {
    std::ostringstream os;
    os << "regression Fisher information is not positive at theta = " << theta;
    throw ModelError(os.str());
  }
  const double info = ar_noise_fisher(model) * info_theta;
  const double scale = -1.0 / std::sqrt(info * static_cast<double>(n));

  struct Term {
    double lag, c;
  };
  std::vector<Term> terms(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const double lag = sample.values[j - 1];
    const double resid = sample.values[j] - model.regression(theta, lag);
    terms[j - 1] = {lag, model.noise_logpdf_d1(resid) * model.regression_dtheta(theta, lag)};
  }
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.lag < b.lag; });

  auto tau_at = [&](double x) { return interp_uniform(cum, d.lo, d.dx, x); };
  auto weight_at = [&](double x) { return d.at(x) * std::pow(model.regression_dtheta(theta, x), 2) / info_theta; };

  ScorePath out;
  const double first = std::min(d.x(0), terms.front().lag);
  const double last = std::max(d.x(d.size() - 1), terms.back().lag);
  out.index.push_back(first);
  out.values.push_back(0.0);
  out.tau.push_back(0.0);
  out.weight.push_back(weight_at(first));
  double sum = 0.0;
  for (std::size_t j = 0; j < n;) {
    const double lag = terms[j].lag;
    const double q = tau_at(lag);
    out.index.push_back(lag);
    out.values.push_back(sum * scale);
    out.tau.push_back(q);
    out.weight.push_back(weight_at(lag));
    for (; j < n && terms[j].lag == lag; ++j) sum += terms[j].c;
    out.index.push_back(lag);
    out.values.push_back(sum * scale);
    out.tau.push_back(q);
    out.weight.push_back(0.0);
  }
  out.index.push_back(last);
  out.values.push_back(sum * scale);
  out.tau.push_back(info_theta);
  out.weight.push_back(weight_at(last));
  // The first point may sit below the density grid; tau starts at 0 there.
  out.tau.front() = 0.0;
  normalize_time_change(out.tau, nullptr);
  return out;
}

TestOutcome run_test_ar(const ARModel& model, const SeriesSample& sample, double alpha,
                        StatisticKind kind) {
  const Estimate theta_hat = mle_ar(model, sample);
  const ScorePath u = score_path_ar(model, sample, theta_hat.value);
  return make_outcome(kind, delta_stat(u, kind), alpha, Approach::direct, theta_hat, std::nullopt);
}

}  // namespace sfgof
