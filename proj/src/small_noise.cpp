#include "sfgof/small_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sfgof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Left-point samples of the path reused by every likelihood-type sum.
struct PathSamples {
  std::vector<double> t, x, dx, var;
  double h = 0.0;
};

PathSamples left_samples(const SmallNoiseModel& model, const Trajectory& traj) {
  const std::size_t n = traj.grid.num_steps();
  if (traj.values.size() != n + 1) throw DomainError("trajectory length does not match its grid");
  PathSamples s;
  s.h = traj.grid.step();
  s.t.resize(n);
  s.x.resize(n);
  s.dx.resize(n);
  s.var.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.t[i] = traj.grid.point(i);
    s.x[i] = traj.values[i];
    s.dx[i] = traj.values[i + 1] - traj.values[i];
    const double sd = model.diffusion(s.t[i], s.x[i]);
    if (!(sd > 0.0)) {
      std::ostringstream os;
      os << "diffusion coefficient must be positive, got " << sd << " at t = " << s.t[i];
      throw ModelError(os.str());
    }
    s.var[i] = sd * sd;
  }
  return s;
}

void check_epsilon_positive(const Trajectory& traj) {
  if (!(traj.epsilon > 0.0)) throw DomainError("score path normalization needs epsilon > 0");
}

bool at_boundary(const ParamInterval& domain, double theta) {
  return domain.near_boundary(theta, 1e-6 * domain.width());
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace

SmallNoiseModel linear_small_noise(double x0, double sigma, double horizon,
                                   ParamInterval theta_domain) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  SmallNoiseModel m;
  m.name = "linear";
  m.drift = [](double theta, double, double x) { return theta * x; };
  m.drift_dtheta = [](double, double, double x) { return x; };
  m.drift_dtheta_dx = [](double, double, double) { return 1.0; };
  m.diffusion = [sigma](double, double) { return sigma; };
  m.x0 = x0;
  m.horizon = horizon;
  m.theta_domain = theta_domain;
  return m;
}

SmallNoiseModel sin_perturbed_alternative(const SmallNoiseModel& null_model, double theta0,
                                          double amplitude) {
  SmallNoiseModel m = null_model;
  m.name = null_model.name + "+sin";
  const double period = null_model.horizon;
  m.drift = [base = null_model.drift, theta0, amplitude, period](double, double t, double x) {
    return base(theta0, t, x) + amplitude * std::sin(kTwoPi * t / period);
  };
  return m;
}

SmallNoiseModel late_linear_small_noise(double x0, double sigma, double horizon, double early_rate,
                                        ParamInterval theta_domain) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  SmallNoiseModel m;
  m.name = "late-linear";
  auto ramp = [horizon](double t) { return smoothstep((t - 0.5 * horizon) / (0.1 * horizon)); };
  m.drift = [ramp, early_rate](double theta, double t, double x) {
    const double r = ramp(t);
    return ((1.0 - r) * early_rate + r * theta) * x;
  };
  m.drift_dtheta = [ramp](double, double t, double x) { return ramp(t) * x; };
  m.drift_dtheta_dx = [ramp](double, double t, double) { return ramp(t); };
  m.diffusion = [sigma](double, double) { return sigma; };
  m.x0 = x0;
  m.horizon = horizon;
  m.theta_domain = theta_domain;
  return m;
}

SmallNoiseModel invisible_alternative(const SmallNoiseModel& late_linear, double theta_star,
                                      double amplitude) {
  SmallNoiseModel m = late_linear;
  m.name = "late-linear+early-sin";
  const double horizon = late_linear.horizon;
  m.drift = [base = late_linear.drift, theta_star, amplitude, horizon](double, double t, double x) {
    const double bump = t < 0.5 * horizon ? amplitude * std::sin(2.0 * kTwoPi * t / horizon) : 0.0;
    return base(theta_star, t, x) + bump;
  };
  return m;
}

Trajectory simulate_sde(const SmallNoiseModel& model, double theta0, double epsilon,
                        const TimeGrid& grid, RngStream& rng) {
  if (!model.theta_domain.contains(theta0)) throw DomainError("theta0 outside the parameter interval");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  const std::size_t n = grid.num_steps();
  const double h = grid.step();
  const double sqrt_h = std::sqrt(h);
  Trajectory traj{grid, std::vector<double>(n + 1), epsilon, std::vector<double>(n)};
  double x = model.x0;
  traj.values[0] = x;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.point(k);
    const double dw = sqrt_h * rng.normal();
    traj.wiener_increments[k] = dw;
    x += model.drift(theta0, t, x) * h + epsilon * model.diffusion(t, x) * dw;
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "Euler path is not finite at t = " << grid.point(k + 1);
      throw NumericalError(os.str());
    }
    traj.values[k + 1] = x;
  }
  return traj;
}

std::vector<double> deterministic_path(const SmallNoiseModel& model, double theta) {
  return ode_solve([&](double t, double x) { return model.drift(theta, t, x); }, model.x0,
                   model.grid());
}

double fisher_small_noise(const SmallNoiseModel& model, double theta) {
  const TimeGrid grid = model.grid();
  const auto x = deterministic_path(model, theta);
  std::vector<double> integrand(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = grid.point(k);
    const double r = model.drift_dtheta(theta, t, x[k]) / model.diffusion(t, x[k]);
    integrand[k] = r * r;
  }
  const double info = integrate_samples(integrand, grid.step());
  if (!(info > 0.0) || !std::isfinite(info)) {
    std::ostringstream os;
    os << "Fisher information is not positive at theta = " << theta;
    throw ModelError(os.str());
  }
  return info;
}

Estimate mle_small_noise(const SmallNoiseModel& model, const Trajectory& traj) {
  const PathSamples s = left_samples(model, traj);
  auto loglik = [&](double theta) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      const double drift = model.drift(theta, s.t[i], s.x[i]);
      sum += (drift * s.dx[i] - 0.5 * drift * drift * s.h) / s.var[i];
    }
    return sum;
  };
  const double theta = maximize_1d(loglik, model.theta_domain);
  return {theta, at_boundary(model.theta_domain, theta)};
}

double default_mde_window(const Trajectory& traj, std::size_t min_steps) {
  const double eps = traj.epsilon;
  const double floor_window = static_cast<double>(min_steps) * traj.grid.step();
  double nu = (eps > 0.0 && eps < 1.0) ? eps * eps * std::log(1.0 / eps) : 0.0;
  nu = std::max(nu, floor_window);
  return std::min(nu, traj.grid.end() - traj.grid.start());
}

Estimate mde_preliminary(const SmallNoiseModel& model, const Trajectory& traj,
                         std::optional<double> nu_epsilon) {
  const double nu = nu_epsilon.value_or(default_mde_window(traj));
  const double span = traj.grid.end() - traj.grid.start();
  if (!(nu > 0.0 && nu <= span)) throw DomainError("MDE window must lie in (0, T]");
  const std::size_t steps = traj.grid.index_at_or_after(traj.grid.start() + nu);
  if (steps + 1 < 8) {
    std::ostringstream os;
    os << "MDE window [0, " << nu << "] holds only " << steps + 1 << " grid points (need 8)";
    throw ConfigError(os.str());
  }
  const double h = traj.grid.step();
  std::vector<double> sq(steps + 1);
  auto distance = [&](double theta) {
    const auto x = ode_solve_prefix([&](double t, double y) { return model.drift(theta, t, y); },
                                    traj.values[0], traj.grid, steps);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double d = traj.values[k] - x[k];
      sq[k] = d * d;
    }
    return integrate_samples(sq, h);
  };
  const double theta = minimize_1d(distance, model.theta_domain);
  return {theta, at_boundary(model.theta_domain, theta)};
}

ScorePath score_path_split(const SmallNoiseModel& model, const Trajectory& traj, double theta_bar,
                           double theta_hat, double nu_epsilon) {
  check_epsilon_positive(traj);
  const PathSamples s = left_samples(model, traj);
  const std::size_t start = traj.grid.index_at_or_after(traj.grid.start() + nu_epsilon);
  const std::size_t n = traj.grid.num_steps();
  if (start >= n) throw DomainError("split window leaves no observations");

  ScorePath out;
  const std::size_t len = n - start + 1;
  out.index.resize(len);
  out.values.assign(len, 0.0);
  out.tau.assign(len, 0.0);
  out.weight.assign(len, 0.0);
  double v = 0.0, q = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    const std::size_t k = i - start;
    const double g = model.drift_dtheta(theta_bar, s.t[i], s.x[i]) / s.var[i];
    const double comp = model.drift(theta_hat, s.t[i], s.x[i]) * s.h;
    out.index[k] = s.t[i];
    out.weight[k] = g * g * s.var[i];
    v += g * (s.dx[i] - comp);
    q += g * g * s.var[i] * s.h;
    out.values[k + 1] = v;
    out.tau[k + 1] = q;
  }
  out.index[len - 1] = traj.grid.end();
  {
    const double x_end = traj.values[n];
    const double sd = model.diffusion(traj.grid.end(), x_end);
    const double g = model.drift_dtheta(theta_bar, traj.grid.end(), x_end) / (sd * sd);
    out.weight[len - 1] = g * g * sd * sd;
  }
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw ModelError("observed information on the split window is not positive");
  }
  // Normalized by the information accumulated on the window itself.
  const double scale = 1.0 / (traj.epsilon * std::sqrt(q));
  for (auto& x : out.values) x *= scale;
  normalize_time_change(out.tau, nullptr);
  for (auto& w : out.weight) w /= q;
  return out;
}

ScorePath score_path_ito(const SmallNoiseModel& model, const Trajectory& traj, double theta_hat) {
  if (!model.drift_dtheta_dx) {
    throw ConfigError("the Ito route needs drift_dtheta_dx in the model");
  }
  check_epsilon_positive(traj);
  const PathSamples s = left_samples(model, traj);
  const std::size_t n = traj.grid.num_steps();
  const double info = fisher_small_noise(model, theta_hat);

  // H tabulated on an x-grid covering the path, at evenly spaced time knots.
  constexpr std::size_t kXPoints = 2049;
  constexpr std::size_t kKnots = 65;
  double lo = model.x0, hi = model.x0;
  for (double x : traj.values) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double pad = std::max(1e-3 * (hi - lo), 1e-6 * std::max(1.0, std::abs(model.x0)));
  lo -= pad;
  hi += pad;
  const double dx = (hi - lo) / static_cast<double>(kXPoints - 1);
  const double t0 = traj.grid.start();
  const double dt_knot = (traj.grid.end() - t0) / static_cast<double>(kKnots - 1);

  std::vector<std::vector<double>> table(kKnots);
  std::vector<double> row(kXPoints);
  for (std::size_t j = 0; j < kKnots; ++j) {
    const double t = t0 + dt_knot * static_cast<double>(j);
    for (std::size_t m = 0; m < kXPoints; ++m) {
      const double y = lo + dx * static_cast<double>(m);
      const double sd = model.diffusion(t, y);
      row[m] = model.drift_dtheta(theta_hat, t, y) / (sd * sd);
    }
    table[j] = cumulative_simpson(row, dx);
    const double origin = interp_uniform(table[j], lo, dx, model.x0);
    for (auto& v : table[j]) v -= origin;
  }
  auto knot_of = [&](double t) {
    const auto j = static_cast<std::size_t>(std::clamp((t - t0) / dt_knot, 0.0, double(kKnots - 2)));
    return std::min(j, kKnots - 2);
  };
  auto h_value = [&](double t, double x) {
    const std::size_t j = knot_of(t);
    const double frac = std::clamp((t - t0) / dt_knot - static_cast<double>(j), 0.0, 1.0);
    const double a = interp_uniform(table[j], lo, dx, x);
    const double b = interp_uniform(table[j + 1], lo, dx, x);
    return a + frac * (b - a);
  };
  auto h_time_derivative = [&](double t, double x) {
    const std::size_t j = knot_of(t);
    return (interp_uniform(table[j + 1], lo, dx, x) - interp_uniform(table[j], lo, dx, x)) / dt_knot;
  };

  ScorePath out;
  out.index.resize(n + 1);
  out.values.assign(n + 1, 0.0);
  out.tau.assign(n + 1, 0.0);
  out.weight.assign(n + 1, 0.0);
  double riemann = 0.0, q = 0.0, correction = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s.t[i], x = s.x[i];
    const double sdot = model.drift_dtheta(theta_hat, t, x);
    riemann += (h_time_derivative(t, x) + sdot * model.drift(theta_hat, t, x) / s.var[i]) * s.h;
    out.index[i] = t;
    out.weight[i] = sdot * sdot / s.var[i];
    q += out.weight[i] * s.h;
    out.tau[i + 1] = q;
    const std::size_t k = i + 1;
    out.values[k] = h_value(traj.grid.point(k), traj.values[k]) - riemann;

    // sigma^2 d/dx (Sdot / sigma^2) for the dropped second-order term.
    const double sd = std::sqrt(s.var[i]);
    const double step = 1e-6 * std::max(1.0, std::abs(x));
    const double dsd = (model.diffusion(t, x + step) - model.diffusion(t, x - step)) / (2.0 * step);
    correction += (model.drift_dtheta_dx(theta_hat, t, x) - 2.0 * sdot * dsd / sd) * s.h;
  }
  out.index[n] = traj.grid.end();
  {
    const double t = traj.grid.end(), x = traj.values[n];
    const double sd = model.diffusion(t, x);
    const double sdot = model.drift_dtheta(theta_hat, t, x);
    out.weight[n] = sdot * sdot / (sd * sd);
  }
  const double scale = 1.0 / (traj.epsilon * std::sqrt(info));
  for (auto& v : out.values) v *= scale;
  out.omitted_term = 0.5 * traj.epsilon * traj.epsilon * correction * scale;
  normalize_time_change(out.tau, nullptr);
  for (auto& w : out.weight) w /= q;
  return out;
}

ScorePath score_path_direct(const SmallNoiseModel& model, const Trajectory& traj, double theta) {
  check_epsilon_positive(traj);
  const PathSamples s = left_samples(model, traj);
  const std::size_t n = traj.grid.num_steps();
  const double info = fisher_small_noise(model, theta);
  ScorePath out;
  out.index.resize(n + 1);
  out.values.assign(n + 1, 0.0);
  out.tau.assign(n + 1, 0.0);
  out.weight.assign(n + 1, 0.0);
  double v = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sdot = model.drift_dtheta(theta, s.t[i], s.x[i]);
    const double g = sdot / s.var[i];
    v += g * (s.dx[i] - model.drift(theta, s.t[i], s.x[i]) * s.h);
    out.index[i] = s.t[i];
    out.weight[i] = g * sdot;
    q += out.weight[i] * s.h;
    out.values[i + 1] = v;
    out.tau[i + 1] = q;
  }
  out.index[n] = traj.grid.end();
  out.weight[n] = out.weight[n - 1];
  const double scale = 1.0 / (traj.epsilon * std::sqrt(info));
  for (auto& x : out.values) x *= scale;
  normalize_time_change(out.tau, nullptr);
  for (auto& w : out.weight) w /= q;
  return out;
}

TestOutcome run_test_small_noise(const SmallNoiseModel& model, const Trajectory& traj,
                                 double alpha, Approach approach, StatisticKind kind) {
  const Estimate theta_hat = mle_small_noise(model, traj);
  switch (approach) {
    case Approach::split: {
      const double nu = default_mde_window(traj);
      const Estimate theta_bar = mde_preliminary(model, traj, nu);
      const ScorePath v = score_path_split(model, traj, theta_bar.value, theta_hat.value, nu);
      return make_outcome(kind, delta_stat(v, kind), alpha, approach, theta_hat, theta_bar);
    }
    case Approach::ito: {
      const ScorePath u = score_path_ito(model, traj, theta_hat.value);
      return make_outcome(kind, delta_stat(u, kind), alpha, approach, theta_hat, std::nullopt);
    }
    case Approach::direct: {
      const ScorePath u = score_path_direct(model, traj, theta_hat.value);
      return make_outcome(kind, delta_stat(u, kind), alpha, approach, theta_hat, std::nullopt);
    }
    case Approach::smoothed: break;
  }
  throw ConfigError("small-noise tests support the split, ito and direct approaches");
}

}  // namespace sfgof
