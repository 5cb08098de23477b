#include "sfgof/inference_kit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace sfgof {

ParamInterval::ParamInterval(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    std::ostringstream os;
    os << "parameter interval requires finite a < b, got (" << lower << ", " << upper << ")";
    throw DomainError(os.str());
  }
}

double ParamInterval::clamp(double theta) const { return std::clamp(theta, lower_, upper_); }

bool ParamInterval::near_boundary(double theta, double tol) const {
  return theta - lower_ <= tol || upper_ - theta <= tol;
}

TimeGrid::TimeGrid(double start, double end, std::size_t num_steps)
    : start_(start), end_(end), num_steps_(num_steps) {
  if (!std::isfinite(start) || !std::isfinite(end) || !(start < end)) {
    throw DomainError("time grid requires finite start < end");
  }
  if (num_steps < 2) throw DomainError("time grid requires at least 2 steps");
}

double TimeGrid::point(std::size_t k) const {
  if (k >= num_steps_) return k == num_steps_ ? end_ : end_ + step() * double(k - num_steps_);
  return start_ + step() * static_cast<double>(k);
}

std::size_t TimeGrid::index_at_or_after(double t) const {
  if (t <= start_) return 0;
  if (t >= end_) return num_steps_;
  auto k = static_cast<std::size_t>(std::ceil((t - start_) / step() - 1e-9));
  return std::min(k, num_steps_);
}

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon et al. 2011).

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                           std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(master_seed_),
                                            static_cast<std::uint32_t>(master_seed_ >> 32)};
  const auto out = philox4x32_10(ctr, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
  ++block_;
}

RngStream::result_type RngStream::operator()() {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double RngStream::uniform() {
  // 53 random bits centred in their cell: never exactly 0 or 1.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double RngStream::exponential() { return -std::log(uniform()); }

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(master_seed_, splitmix64(stream_id_ ^ splitmix64(tag + 0x5851F42D4C957F2Dull)));
}

// ---------------------------------------------------------------------------

void require_finite(double value, const char* what, double where) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << what << " is not finite at " << where;
    throw NumericalError(os.str());
  }
}

namespace {

double golden_section_max(const ScalarFn& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  require_finite(f1, "objective", x1);
  require_finite(f2, "objective", x2);
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
      require_finite(f1, "objective", x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
      require_finite(f2, "objective", x2);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

}  // namespace

double maximize_1d(const ScalarFn& objective, const ParamInterval& interval, double tol,
                   int grid_points) {
  if (!(tol > 0.0)) throw DomainError("maximize_1d requires tol > 0");
  if (grid_points < 3) throw DomainError("maximize_1d requires at least 3 grid points");
  const auto n = static_cast<std::size_t>(grid_points);
  const double a = interval.lower();
  const double h = interval.width() / static_cast<double>(n - 1);

  std::vector<double> xs(n), fs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = i + 1 == n ? interval.upper() : a + h * static_cast<double>(i);
    fs[i] = objective(xs[i]);
    require_finite(fs[i], "objective", xs[i]);
  }
  const auto best_grid = static_cast<std::size_t>(std::max_element(fs.begin(), fs.end()) - fs.begin());

  struct Candidate {
    double x;
    double f;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(n + 4);
  for (std::size_t i = 0; i < n; ++i) candidates.push_back({xs[i], fs[i]});

  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? fs[i - 1] : -std::numeric_limits<double>::infinity();
    const double right = i + 1 < n ? fs[i + 1] : -std::numeric_limits<double>::infinity();
    const bool local_max = fs[i] >= left && fs[i] >= right && (fs[i] > left || fs[i] > right);
    if (!local_max && i != best_grid) continue;
    const double lo = xs[i > 0 ? i - 1 : 0];
    const double hi = xs[i + 1 < n ? i + 1 : n - 1];
    const double x = golden_section_max(objective, lo, hi, tol);
    const double fx = objective(x);
    require_finite(fx, "objective", x);
    candidates.push_back({x, fx});
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::max(best, c.f);
  // Ties are judged relative to the spread of the objective over the grid,
  // so tiny-scale objectives (L2 distances over short windows) still
  // resolve; a flat objective ties exactly and returns the lowest point.
  const double spread = best - *std::min_element(fs.begin(), fs.end());
  double arg = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.f >= best - tol * spread) arg = std::min(arg, c.x);
  }
  return arg;
}

double minimize_1d(const ScalarFn& objective, const ParamInterval& interval, double tol,
                   int grid_points) {
  return maximize_1d([&](double x) { return -objective(x); }, interval, tol, grid_points);
}

double integrate_1d(const ScalarFn& f, double a, double b, int n_panels) {
  if (!(a < b)) throw DomainError("integrate_1d requires a < b");
  if (n_panels < 2) throw DomainError("integrate_1d requires at least 2 panels");
  if (n_panels % 2 != 0) ++n_panels;
  const double h = (b - a) / n_panels;
  double sum = 0.0;
  for (int i = 0; i <= n_panels; ++i) {
    const double x = i == n_panels ? b : a + h * i;
    const double fx = f(x);
    require_finite(fx, "integrand", x);
    const double w = (i == 0 || i == n_panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * fx;
  }
  return sum * h / 3.0;
}

double integrate_samples(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (y[0] + y[1]);
  std::size_t intervals = n - 1;
  double tail = 0.0;
  if (intervals % 2 == 1) {
    if (intervals == 1) return 0.5 * h * (y[0] + y[1]);
    // Simpson 3/8 over the last three intervals.
    const std::size_t k = n - 4;
    tail = 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
    intervals -= 3;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 2 <= intervals; i += 2) sum += y[i] + 4.0 * y[i + 1] + y[i + 2];
  return sum * h / 3.0 + tail;
}

std::vector<double> cumulative_simpson(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[1] = 0.5 * h * (y[0] + y[1]);
    return out;
  }
  for (std::size_t i = 2; i < n; i += 2) {
    out[i] = out[i - 2] + h / 3.0 * (y[i - 2] + 4.0 * y[i - 1] + y[i]);
    out[i - 1] = out[i - 2] + h / 12.0 * (5.0 * y[i - 2] + 8.0 * y[i - 1] - y[i]);
  }
  if (n % 2 == 0) {
    // Last interval from the left three-point formula mirrored.
    const std::size_t i = n - 1;
    out[i] = out[i - 1] + h / 12.0 * (5.0 * y[i] + 8.0 * y[i - 1] - y[i - 2]);
  }
  return out;
}

std::vector<double> cumulative_trapezoid(std::span<const double> y, double h) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
  return out;
}

std::vector<double> ode_solve_prefix(const OdeRhs& rhs, double x0, const TimeGrid& grid,
                                     std::size_t steps) {
  steps = std::min(steps, grid.num_steps());
  std::vector<double> x(steps + 1);
  x[0] = x0;
  const double h = grid.step();
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = grid.point(k);
    const double xk = x[k];
    const double k1 = rhs(t, xk);
    const double k2 = rhs(t + 0.5 * h, xk + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, xk + 0.5 * h * k2);
    const double k4 = rhs(t + h, xk + h * k3);
    x[k + 1] = xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x[k + 1])) {
      std::ostringstream os;
      os << "ODE solution blew up at t = " << grid.point(k + 1);
      throw NumericalError(os.str());
    }
  }
  return x;
}

std::vector<double> ode_solve(const OdeRhs& rhs, double x0, const TimeGrid& grid) {
  return ode_solve_prefix(rhs, x0, grid, grid.num_steps());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double interp_uniform(std::span<const double> y, double x0, double h, double x) {
  const std::size_t n = y.size();
  if (n == 0) throw DomainError("interpolation table is empty");
  const double pos = (x - x0) / h;
  if (pos <= 0.0) return y.front();
  if (pos >= static_cast<double>(n - 1)) return y.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return y[i] + frac * (y[i + 1] - y[i]);
}

}  // namespace sfgof
