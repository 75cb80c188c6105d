#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "voldens/deconv.hpp"
#include "voldens/io.hpp"
#include "voldens/kernels.hpp"
#include "voldens/models.hpp"
#include "voldens/pipeline.hpp"

namespace {

using namespace voldens;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSelfTest = 3;

struct SimulateOpts {
  std::string model;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::size_t burn_in = 1000;
  std::string out;
  double a = 0.0;
  double tau = 1.0;
  double mu = 0.0;
  std::string alpha;
  std::string beta;
};

models::ModelSpec model_from_opts(const SimulateOpts& o) {
  try {
    if (o.model == "log-ar1") {
      return models::ModelSpec::log_ar1(o.mu, o.a, o.tau, o.seed, o.burn_in);
    }
    if (o.model == "garch") {
      if (o.alpha.empty()) throw io::UsageError("garch model requires --alpha a0,a1,...");
      const auto alpha = io::parse_double_list(o.alpha, "--alpha");
      std::vector<double> beta;
      if (!o.beta.empty()) beta = io::parse_double_list(o.beta, "--beta");
      return models::ModelSpec::garch(alpha, beta, o.seed, o.burn_in);
    }
    throw io::UsageError("unknown model '" + o.model + "' (expected log-ar1 or garch)");
  } catch (const std::invalid_argument& e) {
    throw io::UsageError(e.what());
  } catch (const io::DataError& e) {
    throw io::UsageError(e.what());
  }
}

int cmd_simulate(const SimulateOpts& o) {
  const models::ModelSpec spec = model_from_opts(o);
  if (o.n < 1) throw io::UsageError("--n must be >= 1");
  const models::SimOutput sim = models::simulate(spec, o.n);
  io::write_sim_csv(o.out, sim);
  std::cout << "wrote " << sim.n << " rows to " << o.out << "\n";
  return kExitOk;
}

struct EstimateOpts {
  std::string input;
  std::string out;
  int p = 1;
  bool h_given = false;
  double h = 0.0;
  std::string h_rule;
  double grid_min = -12.0;
  double grid_max = 6.0;
  int grid_count = 400;
  std::string scale = "log-sigma-sq";
  bool clip_negatives = false;
};

int cmd_estimate(const EstimateOpts& o) {
  if (o.p < 1 || o.p > 3) throw io::UsageError("--p must be 1, 2 or 3");
  if (o.h_given && !o.h_rule.empty()) throw io::UsageError("give either --h or --h-rule, not both");
  if (!o.h_rule.empty() && o.h_rule != "pi-log-n") {
    throw io::UsageError("unknown --h-rule '" + o.h_rule + "' (expected pi-log-n)");
  }
  if (o.grid_count < 2 || !(o.grid_max > o.grid_min)) throw io::UsageError("invalid grid");
  deconv::DensityScale scale = deconv::DensityScale::log_sigma_sq;
  if (o.scale == "sigma-sq") {
    scale = deconv::DensityScale::sigma_sq;
  } else if (o.scale == "sigma") {
    scale = deconv::DensityScale::sigma;
  } else if (o.scale != "log-sigma-sq") {
    throw io::UsageError("unknown --scale '" + o.scale + "'");
  }
  if (scale != deconv::DensityScale::log_sigma_sq && o.p != 1) {
    throw io::UsageError("--scale transforms are available for p = 1 only");
  }

  const io::Csv csv = io::read_csv(o.input);
  const std::size_t xcol = io::column_index(csv, "x");
  std::vector<double> returns;
  returns.reserve(csv.rows.size());
  for (const auto& row : csv.rows) returns.push_back(row[xcol]);
  if (returns.empty()) throw io::DataError(o.input + ": no data rows");

  const models::LogSquareResult logs = models::log_square(returns);
  if (logs.values.size() < static_cast<std::size_t>(o.p)) {
    throw io::DataError("fewer usable observations than p");
  }
  double h = o.h;
  if (!o.h_given) h = deconv::default_bandwidth(logs.values.size());
  std::printf("h = %.6g\n", h);
  std::printf("dropped = %zu\n", logs.dropped);

  const kernels::KernelSpec kernel = kernels::wand_kernel();
  const auto axis = deconv::linspace(o.grid_min, o.grid_max, o.grid_count);
  deconv::EstimateGrid est;
  try {
    if (o.p == 1) {
      est = deconv::estimate_univariate(logs.values, kernel, h, axis);
    } else {
      est = deconv::estimate_multivariate(
          logs.values, o.p, kernel, h,
          std::vector<std::vector<double>>(static_cast<std::size_t>(o.p), axis));
    }
  } catch (const std::domain_error& e) {
    throw io::UsageError(e.what());
  }
  est = deconv::transform_scale(est, scale);
  if (o.clip_negatives) {
    for (double& v : est.values) v = std::max(v, 0.0);
    const double mass = est.riemann_mass();
    if (mass > 0.0) {
      for (double& v : est.values) v /= mass;
    }
  }
  std::printf("mass = %.6g\n", est.riemann_mass());
  io::write_estimate_csv(o.out, est);
  std::cout << "wrote " << est.values.size() << " rows to " << o.out << "\n";
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_override) {
  pipeline::ExperimentConfig cfg = pipeline::experiment_config_from_file(config_path);
  if (!out_override.empty()) cfg.output_path = out_override;
  const pipeline::MiseResult result = pipeline::run_mise_experiment(cfg);
  for (const auto& a : result.aggregates) {
    std::printf("n=%zu h=%.4f mise=%.6g +- %.2g (bias_sq=%.6g variance=%.6g)\n", a.n, a.h,
                a.mean_mise, a.se_mise, a.integrated_bias_sq, a.integrated_variance);
  }
  if (!cfg.output_path.empty()) {
    std::cout << "wrote " << cfg.output_path << ".csv and " << cfg.output_path
              << "_summary.txt\n";
  }
  return kExitOk;
}

int cmd_selftest() {
  const auto checks = pipeline::run_selftest_checks();
  bool all = true;
  for (const auto& c : checks) {
    std::printf("[%s] %s — %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    all = all && c.pass;
  }
  std::printf("%s\n", all ? "selftest: all checks passed" : "selftest: FAILURES present");
  return all ? kExitOk : kExitSelfTest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voldens: volatility density estimation for discrete-time SV models"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help and exit");
  app.option_defaults()->ignore_case(false);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a volatility model to CSV");
  simulate->add_option("--model", sim.model, "log-ar1 or garch")->required();
  simulate->add_option("--n", sim.n, "number of observations")->required();
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--burn-in", sim.burn_in, "burn-in steps to discard");
  simulate->add_option("--out", sim.out, "output CSV path")->required();
  simulate->add_option("--a", sim.a, "log-AR(1) autoregression coefficient");
  simulate->add_option("--tau", sim.tau, "log-AR(1) innovation sd");
  simulate->add_option("--mu", sim.mu, "log-AR(1) stationary mean");
  simulate->add_option("--alpha", sim.alpha, "GARCH alpha_0,alpha_1,... (comma separated)");
  simulate->add_option("--beta", sim.beta, "GARCH beta_1,... (comma separated)");

  EstimateOpts est;
  auto* estimate = app.add_subcommand("estimate", "estimate the volatility density from CSV returns");
  estimate->set_help_flag("--help", "print help and exit");
  estimate->add_option("--input", est.input, "input CSV with an x column")->required();
  estimate->add_option("--out", est.out, "output CSV path")->required();
  estimate->add_option("--p", est.p, "dimension (1, 2 or 3)");
  auto* h_opt = estimate->add_option("--h", est.h, "fixed bandwidth");
  estimate->add_option("--h-rule", est.h_rule, "bandwidth rule (pi-log-n, the default)");
  estimate->add_option("--grid-min", est.grid_min, "evaluation grid minimum (log scale)");
  estimate->add_option("--grid-max", est.grid_max, "evaluation grid maximum (log scale)");
  estimate->add_option("--grid-count", est.grid_count, "evaluation grid size per axis");
  estimate->add_option("--scale", est.scale, "log-sigma-sq, sigma-sq or sigma");
  estimate->add_flag("--clip-negatives", est.clip_negatives,
                     "clip negative density values to zero and renormalize");

  std::string config_path, out_override;
  auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo MISE experiment");
  experiment->add_option("--config", config_path, "key = value config file")->required();
  experiment->add_option("--out", out_override, "override the config output prefix");

  app.add_subcommand("selftest", "run the built-in verification battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  est.h_given = h_opt->count() > 0;

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (estimate->parsed()) return cmd_estimate(est);
    if (experiment->parsed()) return cmd_experiment(config_path, out_override);
    return cmd_selftest();
  } catch (const io::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const io::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
