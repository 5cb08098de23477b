#include "sfgof/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sfgof {

namespace {

constexpr std::size_t kCompensatorPoints = 4097;

bool at_boundary(const ParamInterval& domain, double theta) {
  return domain.near_boundary(theta, 1e-6 * domain.width());
}

double checked_intensity(const PoissonModel& model, double theta, double t) {
  const double lambda = model.intensity(theta, t);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    std::ostringstream os;
    os << "intensity must be positive and finite, got " << lambda << " at t = " << t
       << " (theta = " << theta << ")";
    throw ModelError(os.str());
  }
  return lambda;
}

// Cubic Hermite interpolation of a tabulated antiderivative F with known
// derivative f, on a uniform grid starting at 0.
double hermite(const std::vector<double>& F, const std::vector<double>& f, double h, double t) {
  const double pos = std::clamp(t / h, 0.0, static_cast<double>(F.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(pos), F.size() - 2);
  const double u = pos - static_cast<double>(i);
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * F[i] + (u3 - 2 * u2 + u) * h * f[i] + (-2 * u3 + 3 * u2) * F[i + 1] +
         (u3 - u2) * h * f[i + 1];
}

struct LinearTables {
  double step;
  std::vector<double> H, K;
  double tH, HH;
};

LinearTables linear_tables(const LinearIntensity& linear, double period, std::size_t points) {
  LinearTables tab;
  tab.step = period / static_cast<double>(points - 1);
  std::vector<double> h(points), tH(points), HH(points);
  for (std::size_t k = 0; k < points; ++k) h[k] = linear.h(tab.step * static_cast<double>(k));
  tab.H = cumulative_simpson(h, tab.step);
  tab.K = cumulative_simpson(tab.H, tab.step);
  for (std::size_t k = 0; k < points; ++k) {
    tH[k] = tab.step * static_cast<double>(k) * tab.H[k];
    HH[k] = tab.H[k] * tab.H[k];
  }
  tab.tH = integrate_samples(tH, tab.step);
  tab.HH = integrate_samples(HH, tab.step);
  if (!(tab.HH > 0.0)) throw ModelError("h integrates to zero; the linear MDE is undefined");
  return tab;
}

}  // namespace

std::size_t PeriodicEvents::total() const {
  std::size_t count = 0;
  for (const auto& p : periods) count += p.size();
  return count;
}

PoissonModel linear_poisson(LinearIntensity linear, double period, ParamInterval theta_domain,
                            std::string name) {
  if (!(period > 0.0)) throw DomainError("period must be positive");
  PoissonModel m;
  m.name = std::move(name);
  m.intensity = [h = linear.h, l0 = linear.lambda0](double theta, double t) { return theta * h(t) + l0; };
  m.intensity_dtheta = [h = linear.h](double, double t) { return h(t); };
  m.period = period;
  m.theta_domain = theta_domain;
  m.linear = std::move(linear);
  return m;
}

PoissonModel linear_h_poisson(double lambda0, double period, ParamInterval theta_domain) {
  LinearIntensity lin;
  lin.h = [period](double t) { return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t / period); };
  lin.lambda0 = lambda0;
  return linear_poisson(std::move(lin), period, theta_domain, "linear-h");
}

PoissonModel constant_poisson(ParamInterval theta_domain, double period) {
  PoissonModel m;
  m.name = "constant";
  m.intensity = [](double theta, double) { return theta; };
  m.intensity_dtheta = [](double, double) { return 1.0; };
  m.period = period;
  m.theta_domain = theta_domain;
  return m;
}

PoissonModel step_alternative(const PoissonModel& linear_model, double theta0, double jump) {
  PoissonModel m = linear_model;
  m.name = linear_model.name + "+step";
  const double half = 0.5 * linear_model.period;
  m.intensity = [base = linear_model.intensity, theta0, jump, half](double, double t) {
    return base(theta0, t) + (t > half ? jump : 0.0);
  };
  m.intensity_dtheta = [](double, double) { return 0.0; };
  m.linear.reset();
  return m;
}

PeriodicEvents simulate_periodic_poisson(const PoissonModel& model, double theta0, std::size_t n,
                                         RngStream& rng) {
  if (n < 1) throw DomainError("need at least one period");
  if (!model.theta_domain.contains(theta0)) throw DomainError("theta0 outside the parameter interval");
  constexpr std::size_t kProbe = 2048;
  double lambda_max = 0.0;
  for (std::size_t k = 0; k < kProbe; ++k) {
    const double t = model.period * static_cast<double>(k) / static_cast<double>(kProbe - 1);
    lambda_max = std::max(lambda_max, checked_intensity(model, theta0, t));
  }
  lambda_max *= 1.01;
  if (!std::isfinite(lambda_max)) throw ModelError("dominating intensity overflows");

  PeriodicEvents events;
  events.period = model.period;
  events.periods.resize(n);
  for (auto& period : events.periods) {
    double t = 0.0;
    for (;;) {
      t += rng.exponential() / lambda_max;
      if (t >= model.period) break;
      const double lambda = checked_intensity(model, theta0, t);
      if (lambda > lambda_max) {
        std::ostringstream os;
        os << "intensity " << lambda << " exceeds the thinning bound at t = " << t;
        throw ModelError(os.str());
      }
      if (rng.uniform() * lambda_max < lambda) period.push_back(t);
    }
  }
  return events;
}

double fisher_poisson(const PoissonModel& model, double theta) {
  const double info = integrate_1d(
      [&](double t) {
        const double d = model.intensity_dtheta(theta, t);
        return d * d / checked_intensity(model, theta, t);
      },
      0.0, model.period, 512);
  if (!(info > 0.0) || !std::isfinite(info)) {
    std::ostringstream os;
    os << "Fisher information is not positive at theta = " << theta;
    throw ModelError(os.str());
  }
  return info;
}

Estimate mle_poisson(const PoissonModel& model, const PeriodicEvents& events) {
  std::vector<double> times;
  times.reserve(events.total());
  for (const auto& p : events.periods) times.insert(times.end(), p.begin(), p.end());
  if (times.empty()) throw DomainError("the Poisson MLE needs at least one event");
  const double n = static_cast<double>(events.n());
  auto loglik = [&](double theta) {
    double sum = 0.0;
    for (double t : times) sum += std::log(model.intensity(theta, t));
    return sum - n * integrate_1d([&](double t) { return model.intensity(theta, t); }, 0.0, model.period, 256);
  };
  const double theta = maximize_1d(loglik, model.theta_domain);
  return {theta, at_boundary(model.theta_domain, theta)};
}

std::size_t default_preliminary_periods(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))));
}

Estimate mde_linear_intensity(const PoissonModel& model, const PeriodicEvents& events,
                              std::optional<std::size_t> N) {
  if (!model.linear) throw ConfigError("the linear MDE needs a linear-intensity model");
  const std::size_t periods = N.value_or(default_preliminary_periods(events.n()));
  if (periods < 1) throw ConfigError("the MDE needs N >= 1 periods");
  if (periods > events.n()) throw ConfigError("N exceeds the number of observed periods");
  const LinearTables tab = linear_tables(*model.linear, model.period, kCompensatorPoints);

  // int_0^tau* 1{t_e <= t} H(t) dt = K(tau*) - K(t_e).
  double sum = 0.0;
  for (std::size_t j = 0; j < periods; ++j) {
    for (double t : events.periods[j]) sum += tab.K.back() - hermite(tab.K, tab.H, tab.step, t);
  }
  const double mean_term = sum / static_cast<double>(periods);
  const double raw = (mean_term - model.linear->lambda0 * tab.tH) / tab.HH;
  const double clamped = model.theta_domain.clamp(raw);
  return {clamped, clamped != raw || at_boundary(model.theta_domain, clamped)};
}

double mde_linear_functional(const LinearIntensity& linear, double period,
                             const std::function<double(double)>& mean_function,
                             std::size_t grid_points) {
  if (grid_points < 3) throw DomainError("MDE quadrature needs at least 3 nodes");
  const LinearTables tab = linear_tables(linear, period, grid_points);
  std::vector<double> integrand(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double t = tab.step * static_cast<double>(k);
    integrand[k] = (mean_function(t) - linear.lambda0 * t) * tab.H[k];
  }
  return integrate_samples(integrand, tab.step) / tab.HH;
}

ScorePath score_path_poisson(const PoissonModel& model, const PeriodicEvents& events,
                             double theta_bar, double theta_hat, std::size_t N) {
  const std::size_t n = events.n();
  if (N >= n) throw ConfigError("the score path needs N < n periods");
  const double used = static_cast<double>(n - N);
  const double step = model.period / static_cast<double>(kCompensatorPoints - 1);

  auto weight_at = [&](double t) {
    return model.intensity_dtheta(theta_bar, t) / checked_intensity(model, theta_bar, t);
  };
  std::vector<double> comp(kCompensatorPoints), var(kCompensatorPoints);
  for (std::size_t k = 0; k < kCompensatorPoints; ++k) {
    const double t = step * static_cast<double>(k);
    const double w = weight_at(t);
    const double lambda = checked_intensity(model, theta_hat, t);
    comp[k] = w * lambda;
    var[k] = w * model.intensity_dtheta(theta_bar, t);
  }
  const auto C = cumulative_simpson(comp, step);
  const auto Q = cumulative_simpson(var, step);
  const double total = Q.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ModelError("Fisher information at theta_bar is not positive");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * total);

  std::vector<double> times;
  for (std::size_t j = N; j < n; ++j) times.insert(times.end(), events.periods[j].begin(), events.periods[j].end());
  std::sort(times.begin(), times.end());

  ScorePath out;
  const std::size_t len = kCompensatorPoints + 2 * times.size();
  out.index.reserve(len);
  out.values.reserve(len);
  out.tau.reserve(len);
  out.weight.reserve(len);
  double jumps = 0.0;
  auto push = [&](double t, double c, double q, double density) {
    out.index.push_back(t);
    out.values.push_back((jumps - used * c) * scale);
    out.tau.push_back(q);
    out.weight.push_back(density / total);
  };
  std::size_t e = 0;
  for (std::size_t k = 0; k < kCompensatorPoints; ++k) {
    const double tk = k + 1 == kCompensatorPoints ? model.period : step * static_cast<double>(k);
    while (e < times.size() && times[e] < tk) {
      const double t = times[e];
      const double w = weight_at(t);
      const double c = hermite(C, comp, step, t);
      const double q = hermite(Q, var, step, t);
      push(t, c, q, w * model.intensity_dtheta(theta_bar, t));
      jumps += w;
      push(t, c, q, 0.0);
      ++e;
    }
    push(tk, C[k], Q[k], var[k]);
  }
  normalize_time_change(out.tau, nullptr);
  return out;
}

TestOutcome run_test_poisson(const PoissonModel& model, const PeriodicEvents& events, double alpha,
                             StatisticKind kind, const PoissonTestOptions& options) {
  const std::size_t N = options.preliminary_periods.value_or(default_preliminary_periods(events.n()));
  if (N < 1 || N >= events.n()) throw ConfigError("need 1 <= N < n preliminary periods");
  // The MLE uses the same periods as the score path, so V(tau*) is the
  // score at its own root; fitting on all n periods leaves V(tau*) with
  // variance about N/n.
  const auto split = events.periods.begin() + static_cast<std::ptrdiff_t>(N);
  PeriodicEvents tail{events.period, {split, events.periods.end()}};
  const Estimate theta_hat = mle_poisson(model, tail);
  Estimate theta_bar;
  if (model.linear) {
    theta_bar = mde_linear_intensity(model, events, N);
  } else {
    PeriodicEvents head{events.period, {events.periods.begin(), split}};
    theta_bar = mle_poisson(model, head);
  }
  const ScorePath v = score_path_poisson(model, events, theta_bar.value, theta_hat.value, N);
  return make_outcome(kind, delta_stat(v, kind), alpha, Approach::split, theta_hat, theta_bar);
}

}  // namespace sfgof
