// Command-line front end: run simulations to CSV, query the finite-support
// oracle, print derived constants, and validate configs end to end.
// Exit codes: 0 success, 1 config error, 2 invariant violation, 3 infeasible.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "renewal/config.hpp"
#include "renewal/core.hpp"
#include "renewal/harness.hpp"
#include "renewal/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitInfeasible = 3;

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
  const renewal::RunConfig cfg = renewal::load_config_file(config_path);
  std::string out = out_path;
  if (out.empty()) {
    if (!cfg.output) throw renewal::config_error("config: simulate needs --out or an output path");
    out = *cfg.output;
  }
  const renewal::EnsembleSummary summary = renewal::run_from_config(cfg);
  renewal::emit_csv(summary, out);
  std::cout << "wrote " << out << ": " << summary.replications << " replication(s) x "
            << summary.horizon << " task(s), final cumulative ratio "
            << summary.cum_ratio.back() << ", config " << summary.fingerprint_hex() << "\n";
  if (summary.rm_flag)
    std::cerr << "warning: the ratio iterate left its expected range during this run\n";
  return kExitOk;
}

int cmd_theta_star(const std::string& config_path) {
  const renewal::RunConfig cfg = renewal::load_config_file(config_path);
  if (cfg.scenario.system != renewal::SystemKind::FiniteSupport)
    throw renewal::config_error("config: theta-star requires a finite_support scenario");
  const renewal::FiniteSupportSpec& spec = cfg.scenario.finite;
  const renewal::OracleResult res = spec.n() > 0 ? renewal::theta_star_constrained(spec)
                                                 : renewal::theta_star_unconstrained(spec);
  nlohmann::json out{{"feasible", res.feasible}};
  if (std::isfinite(res.slater_s))
    out["slater_s"] = res.slater_s;
  else
    out["slater_s"] = "unconstrained";
  if (res.feasible) {
    out["theta_star"] = res.theta_star;
    out["expectation_point"] = res.expectation_point;
    out["policy"] = res.policy.row_probabilities;
  }
  std::cout << out.dump(2) << "\n";
  return res.feasible ? kExitOk : kExitInfeasible;
}

int cmd_constants(const std::string& config_path) {
  const renewal::RunConfig cfg = renewal::load_config_file(config_path);
  const renewal::Bounds bounds = renewal::scenario_bounds(cfg.scenario);
  std::optional<double> slater = cfg.slater_s;
  std::optional<double> theta;
  if (cfg.scenario.system == renewal::SystemKind::FiniteSupport) {
    const renewal::FiniteSupportSpec& spec = cfg.scenario.finite;
    if (spec.n() > 0) {
      const renewal::OracleResult res = renewal::theta_star_constrained(spec);
      if (!res.feasible) {
        std::cerr << "error: the finite-support constraints are infeasible\n";
        return kExitInfeasible;
      }
      theta = res.theta_star;
      if (!slater && res.slater_s > 0.0 && std::isfinite(res.slater_s)) slater = res.slater_s;
    } else {
      theta = renewal::theta_star_unconstrained(spec).theta_star;
    }
  }
  const renewal::DerivedConstants c =
      renewal::derive_constants(bounds, cfg.params, slater, theta);
  nlohmann::json out{
      {"v", cfg.params.v},       {"alpha", cfg.params.alpha}, {"w", cfg.params.w},
      {"q", cfg.params.q},       {"gamma_min", c.gamma_min},  {"gamma_max", c.gamma_max},
      {"b", c.b},                {"beta1", c.beta1},          {"beta2", c.beta2},
      {"d1", c.d1},              {"d2", c.d2},                {"c1", c.c1},
      {"c2", c.c2},              {"d0", c.d0},
  };
  if (theta) out["theta_star"] = *theta;
  if (slater) out["slater_s"] = *slater;
  if (c.lambda) out["lambda"] = *c.lambda;
  if (c.eta) out["eta"] = *c.eta;
  if (c.rho) out["rho"] = *c.rho;
  if (c.d) out["d"] = *c.d;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_check(const std::string& config_path) {
  const renewal::RunConfig cfg = renewal::load_config_file(config_path);
  const renewal::EnsembleSummary summary = renewal::run_from_config(cfg);
  if (summary.rm_flag) {
    std::cerr << "check failed: the ratio iterate left [0, r_max/t_min]\n";
    return kExitInvariant;
  }
  std::cout << "ok: " << summary.replications << " replication(s) x " << summary.horizon
            << " task(s) ran with every per-step invariant holding; final cumulative ratio "
            << summary.cum_ratio.back() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic renewal optimization toolkit"};
  app.require_subcommand(1);

  std::string sim_config, sim_out, theta_config, const_config, check_config;
  CLI::App* sim = app.add_subcommand("simulate", "run an ensemble and write the per-task CSV");
  sim->add_option("--config", sim_config, "JSON run configuration")->required();
  sim->add_option("--out", sim_out, "output CSV path (overrides config output)");
  CLI::App* theta = app.add_subcommand("theta-star", "solve a finite-support scenario exactly");
  theta->add_option("--config", theta_config, "JSON run configuration")->required();
  CLI::App* consts = app.add_subcommand("constants", "print the derived constants");
  consts->add_option("--config", const_config, "JSON run configuration")->required();
  CLI::App* check = app.add_subcommand("check", "run the config with invariant checking");
  check->add_option("--config", check_config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out);
    if (theta->parsed()) return cmd_theta_star(theta_config);
    if (consts->parsed()) return cmd_constants(const_config);
    if (check->parsed()) return cmd_check(check_config);
  } catch (const renewal::invariant_violation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const renewal::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
