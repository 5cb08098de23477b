#include "sfgof/cli.hpp"

#include <iomanip>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sfgof/config.hpp"
#include "sfgof/limit_laws.hpp"
#include "sfgof/mc_harness.hpp"

namespace sfgof {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

void print_crit(std::ostream& out, double alpha, const std::string& kind_text, const std::string& method_text,
                std::uint64_t seed, std::size_t replicates) {
  const StatisticKind kind = parse_statistic_kind(kind_text);
  const CriticalMethod method = parse_critical_method(method_text);
  RngStream rng(seed, 0);
  CriticalValue cv;
  if (kind == StatisticKind::cvm) {
    CvmCriticalOptions options;
    options.replicates = replicates;
    cv = critical_value_cvm(alpha, method, rng, options);
  } else if (method == CriticalMethod::series) {
    cv = critical_value_ks(alpha);
  } else {
    cv = critical_value_ks_mc(alpha, rng, replicates);
  }
  out << "alpha,kind,method,value,mc_error\n"
      << num(alpha) << ',' << to_string(kind) << ',' << to_string(cv.method) << ',' << num(cv.value) << ','
      << num(cv.mc_error) << '\n';
}

void print_test(std::ostream& out, const LoadedConfig& cfg, std::uint64_t seed) {
  const double alpha = cfg.alphas.front();
  TestOutcome t;
  if (cfg.test_observed) {
    t = cfg.test_observed(alpha);
  } else {
    RngStream rng(seed, 0);
    t = cfg.simulate_and_test(rng, false, alpha);
  }
  out << "model," << cfg.knob << ",approach,kind,theta_hat,theta_bar,statistic,critical,reject\n"
      << cfg.model_name << ',' << num(cfg.knob_value) << ',' << to_string(t.approach) << ','
      << to_string(t.kind) << ',' << num(t.theta_hat.value) << ','
      << (t.theta_bar ? num(t.theta_bar->value) : std::string()) << ',' << num(t.statistic) << ','
      << num(t.critical.value) << ',' << (t.reject ? 1 : 0) << '\n';
}

int run_study(std::ostream& out, std::ostream& err, const std::string& config_path, bool power,
              std::uint64_t seed, const std::string& out_dir, std::size_t threads) {
  const LoadedConfig cfg = load_config_file(config_path);
  const Experiment ex = make_experiment(cfg, power, seed, threads);
  const ExperimentReport report = power ? run_power(ex) : run_size(ex);
  if (!out_dir.empty()) {
    const std::string stem = std::filesystem::path(config_path).stem().string() + (power ? "_power" : "_size");
    write_report(report, out_dir, stem);
  }
  out << report_csv_header() << report_csv_rows(report);
  if (report.exclusions_exceeded()) {
    err << "sfgof: " << report.excluded << " of " << report.replicates
        << " replicates excluded (more than 1%)\n";
    return 3;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-function goodness-of-fit tests for diffusions, Poisson processes and autoregressions"};
  app.require_subcommand(1);

  double alpha = 0.05;
  std::string kind = "cvm";
  std::string method = "series";
  std::uint64_t seed = 1;
  std::size_t crit_replicates = 100000;
  auto* crit = app.add_subcommand("crit", "Critical value of the limiting statistic");
  crit->add_option("--alpha", alpha, "Level in (0, 1)")->required();
  crit->add_option("--kind", kind, "cvm or ks")->check(CLI::IsMember({"cvm", "ks"}));
  crit->add_option("--method", method, "series or mc")->check(CLI::IsMember({"series", "mc"}));
  crit->add_option("--seed", seed, "Master seed");
  crit->add_option("--replicates", crit_replicates, "Draws for the simulated routes");

  std::string family;
  std::string config;
  auto* test = app.add_subcommand("test", "Run one test on simulated or ingested data");
  test->add_option("family", family, "small-noise, ergodic, poisson or ar")->required();
  test->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  test->add_option("--seed", seed, "Seed for the simulated data set");

  std::string out_dir;
  std::size_t threads = 1;
  CLI::App* studies[2];
  for (int k = 0; k < 2; ++k) {
    auto* sub = app.add_subcommand(k == 0 ? "size" : "power",
                                   k == 0 ? "Monte Carlo size study" : "Monte Carlo power study");
    sub->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--out", out_dir, "Directory for the CSV report and sidecar");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    studies[k] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream captured_out, captured_err;
    const int code = app.exit(e, captured_out, captured_err);
    out << captured_out.str();
    err << captured_err.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*crit) {
      print_crit(out, alpha, kind, method, seed, crit_replicates);
      return 0;
    }
    if (*test) {
      const LoadedConfig cfg = load_config_file(config);
      if (cfg.family != parse_family(family)) {
        throw ConfigError("config family is " + std::string(to_string(cfg.family)) + ", not " + family);
      }
      print_test(out, cfg, seed);
      return 0;
    }
    return run_study(out, err, config, studies[1]->parsed(), seed, out_dir, threads);
  } catch (const ConfigError& e) {
    err << "sfgof: config error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "sfgof: domain error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "sfgof: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sfgof
