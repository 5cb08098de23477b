#include "sfgof/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sfgof/ergodic.hpp"
#include "sfgof/small_noise.hpp"

namespace sfgof {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

double required_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(std::string("missing '") + key + "' in " + where);
  return number(obj, key, 0.0);
}

std::size_t count(const json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

ParamInterval domain(const json& obj, ParamInterval fallback) {
  if (!obj.contains("theta_domain")) return fallback;
  const auto& v = obj.at("theta_domain");
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("'theta_domain' must be a pair of numbers");
  }
  return ParamInterval(v[0].get<double>(), v[1].get<double>());
}

double model_theta(const json& model, const ParamInterval& dom) {
  const double theta = required_number(model, "theta", "model");
  if (!dom.contains(theta)) throw ConfigError("model theta lies outside theta_domain");
  return theta;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? p : base / p;
}

// Alternative spec shared by all families: {"type": ..., ...}. "member"
// simulates the null family at another theta.
struct AltSpec {
  std::string type;
  json params;
};

std::optional<AltSpec> read_alternative(const json& j) {
  if (!j.contains("alternative") || j.at("alternative").is_null()) return std::nullopt;
  const auto& a = j.at("alternative");
  if (!a.is_object()) throw ConfigError("'alternative' must be a JSON object");
  AltSpec spec{text(a, "type", ""), a};
  if (spec.type.empty()) throw ConfigError("alternative needs a 'type'");
  return spec;
}

void load_small_noise(const json& j, LoadedConfig& cfg) {
  check_keys(j, {"family", "model", "epsilon", "grid_steps", "approach", "kind", "alpha", "alphas",
                 "replicates", "alternative"},
             "small-noise config");
  const json model = j.value("model", json::object());
  check_keys(model, {"builtin", "theta", "x0", "sigma", "T", "early_rate", "theta_domain"}, "model");
  const std::string builtin = text(model, "builtin", "linear");
  const ParamInterval dom = domain(model, {0.1, 1.5});
  const double theta = model_theta(model, dom);
  const double x0 = number(model, "x0", 1.0);
  const double sigma = number(model, "sigma", 1.0);
  const double horizon = number(model, "T", 1.0);

  SmallNoiseModel null_model;
  if (builtin == "linear") {
    null_model = linear_small_noise(x0, sigma, horizon, dom);
  } else if (builtin == "late-linear") {
    null_model = late_linear_small_noise(x0, sigma, horizon, number(model, "early_rate", 1.0), dom);
  } else {
    throw ConfigError("unknown small-noise builtin '" + builtin + "' (linear, late-linear)");
  }
  null_model.grid_steps = count(j, "grid_steps", 10000);
  if (null_model.grid_steps < 10) throw ConfigError("grid_steps must be at least 10");
  const double epsilon = required_number(j, "epsilon", "small-noise config");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");

  cfg.model_name = null_model.name;
  cfg.knob = "epsilon";
  cfg.knob_value = epsilon;
  if (cfg.approach == Approach::smoothed) throw ConfigError("the smoothed approach is for the ergodic model");

  auto alt = std::make_shared<SmallNoiseModel>(null_model);
  double alt_theta = theta;
  if (auto spec = read_alternative(j)) {
    cfg.has_alternative = true;
    cfg.alternative_name = spec->type;
    const double amp = number(spec->params, "amplitude", 2.0);
    if (spec->type == "sin") {
      check_keys(spec->params, {"type", "amplitude"}, "alternative");
      *alt = sin_perturbed_alternative(null_model, theta, amp);
    } else if (spec->type == "invisible") {
      check_keys(spec->params, {"type", "amplitude"}, "alternative");
      if (builtin != "late-linear") throw ConfigError("the invisible alternative needs the late-linear model");
      *alt = invisible_alternative(null_model, theta, amp);
    } else if (spec->type == "member") {
      check_keys(spec->params, {"type", "theta"}, "alternative");
      alt_theta = required_number(spec->params, "theta", "alternative");
      if (!dom.contains(alt_theta)) throw ConfigError("alternative theta lies outside theta_domain");
    } else {
      throw ConfigError("unknown small-noise alternative '" + spec->type + "' (sin, invisible, member)");
    }
  }
  auto null_ptr = std::make_shared<SmallNoiseModel>(null_model);
  const Approach approach = cfg.approach;
  const StatisticKind kind = cfg.kind;
  cfg.simulate_and_test = [null_ptr, alt, theta, alt_theta, epsilon, approach, kind](
                              RngStream& rng, bool alternative, double alpha) {
    const SmallNoiseModel& sim = alternative ? *alt : *null_ptr;
    const Trajectory traj =
        simulate_sde(sim, alternative ? alt_theta : theta, epsilon, null_ptr->grid(), rng);
    return run_test_small_noise(*null_ptr, traj, alpha, approach, kind);
  };
}

void load_ergodic(const json& j, LoadedConfig& cfg) {
  check_keys(j, {"family", "model", "T", "step", "x_lo", "x_hi", "bandwidth", "window", "approach",
                 "kind", "alpha", "alphas", "replicates", "alternative"},
             "ergodic config");
  const json model = j.value("model", json::object());
  check_keys(model, {"builtin", "theta", "theta_domain"}, "model");
  const std::string builtin = text(model, "builtin", "ou");
  if (builtin != "ou") throw ConfigError("unknown ergodic builtin '" + builtin + "' (ou)");
  const ParamInterval dom = domain(model, {0.25, 4.0});
  const double theta = model_theta(model, dom);
  ErgodicModel null_model = ornstein_uhlenbeck(dom);
  null_model.x_lo = number(j, "x_lo", null_model.x_lo);
  null_model.x_hi = number(j, "x_hi", null_model.x_hi);
  if (!(null_model.x_lo < null_model.x_hi)) throw ConfigError("x_lo must be below x_hi");

  const double horizon = required_number(j, "T", "ergodic config");
  const double step = number(j, "step", 0.01);
  ErgodicTestOptions options;
  if (j.contains("bandwidth")) options.bandwidth = number(j, "bandwidth", 0.0);
  if (j.contains("window")) options.window_T = number(j, "window", 0.0);
  if (cfg.approach != Approach::split && cfg.approach != Approach::smoothed) {
    throw ConfigError("ergodic approach must be split or smoothed");
  }
  cfg.model_name = null_model.name;
  cfg.knob = "T";
  cfg.knob_value = horizon;

  auto alt = std::make_shared<ErgodicModel>(null_model);
  double alt_theta = theta;
  if (auto spec = read_alternative(j)) {
    cfg.has_alternative = true;
    cfg.alternative_name = spec->type;
    if (spec->type == "tanh") {
      check_keys(spec->params, {"type", "amplitude"}, "alternative");
      *alt = tanh_alternative(null_model, number(spec->params, "amplitude", 0.8));
    } else if (spec->type == "member") {
      check_keys(spec->params, {"type", "theta"}, "alternative");
      alt_theta = required_number(spec->params, "theta", "alternative");
      if (!dom.contains(alt_theta)) throw ConfigError("alternative theta lies outside theta_domain");
    } else {
      throw ConfigError("unknown ergodic alternative '" + spec->type + "' (tanh, member)");
    }
  }
  auto null_ptr = std::make_shared<ErgodicModel>(null_model);
  const Approach approach = cfg.approach;
  const StatisticKind kind = cfg.kind;
  cfg.simulate_and_test = [null_ptr, alt, theta, alt_theta, horizon, step, options, approach, kind](
                              RngStream& rng, bool alternative, double alpha) {
    const ErgodicModel& sim = alternative ? *alt : *null_ptr;
    const ErgodicPath path = simulate_ergodic(sim, alternative ? alt_theta : theta, horizon, step, rng);
    return run_test_ergodic(*null_ptr, path, alpha, approach, kind, options);
  };
}

void load_poisson(const json& j, LoadedConfig& cfg, const std::filesystem::path& base) {
  check_keys(j, {"family", "model", "n", "N", "approach", "kind", "alpha", "alphas", "replicates",
                 "alternative", "events_csv"},
             "poisson config");
  const json model = j.value("model", json::object());
  check_keys(model, {"builtin", "theta", "lambda0", "period", "h", "theta_domain"}, "model");
  const std::string builtin = text(model, "builtin", "linear-h");
  const double period = number(model, "period", 1.0);
  PoissonModel null_model;
  ParamInterval dom{0.5, 5.0};
  if (builtin == "linear-h") {
    dom = domain(model, dom);
    double amplitude = 0.5;
    if (model.contains("h")) {
      check_keys(model.at("h"), {"amplitude"}, "h");
      amplitude = number(model.at("h"), "amplitude", 0.5);
    }
    if (!(std::abs(amplitude) < 1.0)) throw ConfigError("h amplitude must lie in (-1, 1)");
    LinearIntensity lin;
    lin.h = [period, amplitude](double t) { return 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * t / period); };
    lin.lambda0 = number(model, "lambda0", 1.0);
    null_model = linear_poisson(std::move(lin), period, dom, "linear-h");
  } else if (builtin == "constant") {
    dom = domain(model, {0.1, 10.0});
    null_model = constant_poisson(dom, period);
  } else {
    throw ConfigError("unknown poisson builtin '" + builtin + "' (linear-h, constant)");
  }
  const double theta = model_theta(model, dom);
  const std::size_t n = count(j, "n", 0);
  if (n < 2) throw ConfigError("poisson config needs n >= 2");
  PoissonTestOptions options;
  if (j.contains("N")) options.preliminary_periods = count(j, "N", 0);
  if (cfg.approach != Approach::split) throw ConfigError("poisson approach must be split");
  cfg.model_name = null_model.name;
  cfg.knob = "n";
  cfg.knob_value = static_cast<double>(n);

  auto alt = std::make_shared<PoissonModel>(null_model);
  double alt_theta = theta;
  if (auto spec = read_alternative(j)) {
    cfg.has_alternative = true;
    cfg.alternative_name = spec->type;
    if (spec->type == "step") {
      check_keys(spec->params, {"type", "jump"}, "alternative");
      if (!null_model.linear) throw ConfigError("the step alternative needs the linear-h model");
      *alt = step_alternative(null_model, theta, number(spec->params, "jump", 0.5));
    } else if (spec->type == "member") {
      check_keys(spec->params, {"type", "theta"}, "alternative");
      alt_theta = required_number(spec->params, "theta", "alternative");
      if (!dom.contains(alt_theta)) throw ConfigError("alternative theta lies outside theta_domain");
    } else {
      throw ConfigError("unknown poisson alternative '" + spec->type + "' (step, member)");
    }
  }
  auto null_ptr = std::make_shared<PoissonModel>(null_model);
  const StatisticKind kind = cfg.kind;
  cfg.simulate_and_test = [null_ptr, alt, theta, alt_theta, n, options, kind](
                              RngStream& rng, bool alternative, double alpha) {
    const PoissonModel& sim = alternative ? *alt : *null_ptr;
    const PeriodicEvents events = simulate_periodic_poisson(sim, alternative ? alt_theta : theta, n, rng);
    return run_test_poisson(*null_ptr, events, alpha, kind, options);
  };
  if (j.contains("events_csv")) {
    const auto file = resolve(base, text(j, "events_csv", ""));
    cfg.test_observed = [null_ptr, file, n, options, kind](double alpha) {
      const PeriodicEvents events = read_events_csv(file, null_ptr->period, n);
      return run_test_poisson(*null_ptr, events, alpha, kind, options);
    };
  }
}

void load_ar(const json& j, LoadedConfig& cfg, const std::filesystem::path& base) {
  check_keys(j, {"family", "model", "n", "approach", "kind", "alpha", "alphas", "replicates",
                 "alternative", "sample_csv"},
             "ar config");
  const json model = j.value("model", json::object());
  check_keys(model, {"builtin", "theta", "sigma", "theta_domain"}, "model");
  const std::string builtin = text(model, "builtin", "linear-gaussian");
  if (builtin != "linear-gaussian") throw ConfigError("unknown ar builtin '" + builtin + "' (linear-gaussian)");
  const ParamInterval dom = domain(model, {-0.9, 0.9});
  const double theta = model_theta(model, dom);
  const ARModel null_model = linear_gaussian_ar(number(model, "sigma", 1.0), dom);
  const std::size_t n = count(j, "n", 0);
  if (n < 10) throw ConfigError("ar config needs n >= 10");
  if (j.contains("approach") && cfg.approach != Approach::direct) {
    throw ConfigError("ar approach must be direct");
  }
  cfg.approach = Approach::direct;
  cfg.model_name = null_model.name;
  cfg.knob = "n";
  cfg.knob_value = static_cast<double>(n);

  auto alt = std::make_shared<ARModel>(null_model);
  double alt_theta = theta;
  if (auto spec = read_alternative(j)) {
    cfg.has_alternative = true;
    cfg.alternative_name = spec->type;
    if (spec->type == "cosine") {
      check_keys(spec->params, {"type", "slope", "amplitude"}, "alternative");
      *alt = cosine_alternative(null_model, number(spec->params, "slope", 0.5),
                                number(spec->params, "amplitude", 0.3));
    } else if (spec->type == "member") {
      check_keys(spec->params, {"type", "theta"}, "alternative");
      alt_theta = required_number(spec->params, "theta", "alternative");
      if (!dom.contains(alt_theta)) throw ConfigError("alternative theta lies outside theta_domain");
    } else {
      throw ConfigError("unknown ar alternative '" + spec->type + "' (cosine, member)");
    }
  }
  auto null_ptr = std::make_shared<ARModel>(null_model);
  // Start laws are solved once; the cosine one needs the kernel fixed point.
  auto null_start = std::make_shared<ARDensity>(ar_invariant_density(null_model, theta));
  std::shared_ptr<ARDensity> alt_start =
      cfg.has_alternative ? std::make_shared<ARDensity>(ar_invariant_density(*alt, alt_theta)) : null_start;
  const StatisticKind kind = cfg.kind;
  cfg.simulate_and_test = [null_ptr, alt, null_start, alt_start, theta, alt_theta, n, kind](
                              RngStream& rng, bool alternative, double alpha) {
    const SeriesSample s = alternative ? simulate_ar(*alt, alt_theta, n, rng, alt_start.get())
                                       : simulate_ar(*null_ptr, theta, n, rng, null_start.get());
    return run_test_ar(*null_ptr, s, alpha, kind);
  };
  if (j.contains("sample_csv")) {
    const auto file = resolve(base, text(j, "sample_csv", ""));
    cfg.test_observed = [null_ptr, file, kind](double alpha) {
      return run_test_ar(*null_ptr, read_series_csv(file), alpha, kind);
    };
  }
}

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::small_noise: return "small-noise";
    case Family::ergodic: return "ergodic";
    case Family::poisson: return "poisson";
    case Family::ar: return "ar";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "small-noise") return Family::small_noise;
  if (s == "ergodic") return Family::ergodic;
  if (s == "poisson") return Family::poisson;
  if (s == "ar") return Family::ar;
  throw ConfigError("unknown family '" + std::string(s) + "' (small-noise, ergodic, poisson, ar)");
}

LoadedConfig load_config_text(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  LoadedConfig cfg;
  try {
    cfg.family = parse_family(text(j, "family", ""));
    cfg.kind = parse_statistic_kind(text(j, "kind", "cvm"));
    cfg.approach = parse_approach(text(j, "approach", "split"));
    if (j.contains("alphas")) {
      const auto& a = j.at("alphas");
      if (!a.is_array() || a.empty()) throw ConfigError("'alphas' must be a nonempty array");
      cfg.alphas.clear();
      for (const auto& v : a) {
        if (!v.is_number()) throw ConfigError("'alphas' must hold numbers");
        cfg.alphas.push_back(v.get<double>());
      }
    } else {
      cfg.alphas = {number(j, "alpha", 0.05)};
    }
    for (double a : cfg.alphas) {
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("every alpha must lie in (0, 1)");
    }
    cfg.replicates = count(j, "replicates", 1000);
    switch (cfg.family) {
      case Family::small_noise: load_small_noise(j, cfg); break;
      case Family::ergodic: load_ergodic(j, cfg); break;
      case Family::poisson: load_poisson(j, cfg, base_dir); break;
      case Family::ar: load_ar(j, cfg, base_dir); break;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  json echo = j;
  echo["approach"] = std::string(to_string(cfg.approach));
  echo["kind"] = std::string(to_string(cfg.kind));
  echo["alphas"] = cfg.alphas;
  echo.erase("alpha");
  echo["replicates"] = cfg.replicates;
  cfg.echo = echo.dump(2);
  return cfg;
}

LoadedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

Experiment make_experiment(const LoadedConfig& config, bool alternative, std::uint64_t master_seed,
                           std::size_t threads) {
  if (alternative && !config.has_alternative) throw ConfigError("config declares no alternative");
  if (!config.simulate_and_test) throw ConfigError("config has no simulator");
  Experiment ex;
  ex.model = alternative ? config.model_name + "/" + config.alternative_name : config.model_name;
  ex.knob = config.knob;
  ex.knob_value = config.knob_value;
  ex.kind = config.kind;
  ex.approach = config.approach;
  ex.replicates = config.replicates;
  ex.alphas = config.alphas;
  ex.master_seed = master_seed;
  ex.threads = threads;
  ex.config_echo = config.echo;
  const double alpha = config.alphas.front();
  ex.replicate = [fn = config.simulate_and_test, alternative, alpha](RngStream& rng) {
    return fn(rng, alternative, alpha).statistic;
  };
  return ex;
}

PeriodicEvents read_events_csv(const std::filesystem::path& path, double period,
                               std::optional<std::size_t> n) {
  if (!(period > 0.0)) throw DomainError("period must be positive");
  const auto lines = read_lines(path);
  std::vector<std::pair<std::size_t, double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto comma = lines[i].find(',');
    double idx = 0.0, t = 0.0;
    const bool ok = comma != std::string::npos && parse_double(lines[i].substr(0, comma), idx) &&
                    parse_double(lines[i].substr(comma + 1), t);
    if (!ok) {
      if (i == 0) continue;
      throw ConfigError(path.string() + ": line " + std::to_string(i + 1) + " is not 'period_index,time'");
    }
    if (!(idx >= 1.0) || idx != std::floor(idx)) {
      throw DomainError(path.string() + ": period_index must be a positive integer (line " +
                        std::to_string(i + 1) + ")");
    }
    if (!(t >= 0.0 && t < period)) {
      throw DomainError(path.string() + ": event time outside [0, period) on line " + std::to_string(i + 1));
    }
    rows.emplace_back(static_cast<std::size_t>(idx), t);
  }
  std::size_t periods = n.value_or(0);
  for (const auto& r : rows) {
    if (n && r.first > *n) throw DomainError(path.string() + ": period_index exceeds n");
    periods = std::max(periods, r.first);
  }
  PeriodicEvents ev;
  ev.period = period;
  ev.periods.resize(periods);
  for (const auto& [idx, t] : rows) ev.periods[idx - 1].push_back(t);
  for (auto& p : ev.periods) std::sort(p.begin(), p.end());
  return ev;
}

SeriesSample read_series_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  SeriesSample s;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double v = 0.0;
    if (!parse_double(lines[i], v)) {
      if (i == 0) continue;
      throw ConfigError(path.string() + ": line " + std::to_string(i + 1) + " is not a number");
    }
    if (!std::isfinite(v)) throw DomainError(path.string() + ": non-finite value on line " + std::to_string(i + 1));
    s.values.push_back(v);
  }
  if (s.values.size() < 2) throw DomainError(path.string() + ": series needs at least two values");
  return s;
}

}  // namespace sfgof
