#pragma once
// JSON run configuration and state serialization. Parsing is strict: every
// object level rejects keys it does not know, so typos fail loudly instead
// of silently running a different experiment.

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "controller.hpp"
#include "core.hpp"
#include "harness.hpp"
#include "scenarios.hpp"

namespace renewal {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ScenarioSpec scenario;
  Algorithm algorithm = Algorithm::Adaptive;
  AlgoParams params;
  bool alpha_auto = false;
  std::int64_t horizon = 0;
  int replications = 1;
  std::int64_t window = 200;
  int threads = 1;
  std::optional<double> slater_s;
  std::optional<std::string> output;
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                               const char* context) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known)
      throw config_error(std::string("config: unknown key \"") + item.key() + "\" in " + context);
  }
}

inline const nlohmann::json& require_key(const nlohmann::json& j, const char* key,
                                         const char* context) {
  auto it = j.find(key);
  if (it == j.end())
    throw config_error(std::string("config: missing key \"") + key + "\" in " + context);
  return *it;
}

inline double as_positive_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw config_error(std::string("config: ") + what + " must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0)) throw config_error(std::string("config: ") + what + " must be positive");
  return v;
}

inline ScenarioSpec parse_scenario(const nlohmann::json& j, std::uint64_t seed) {
  if (!j.is_object()) throw config_error("config: scenario must be an object");
  require_known_keys(j, {"system", "schedule", "p_av", "atoms"}, "scenario");
  ScenarioSpec spec;
  spec.seed = seed;
  const std::string system = require_key(j, "system", "scenario").get<std::string>();
  if (system == "system1") {
    spec.system = SystemKind::System1;
  } else if (system == "system2") {
    spec.system = SystemKind::System2;
  } else if (system == "finite_support") {
    spec.system = SystemKind::FiniteSupport;
  } else {
    throw config_error("config: scenario.system must be system1, system2, or finite_support");
  }

  if (j.contains("p_av")) {
    if (spec.system != SystemKind::System2)
      throw config_error("config: p_av applies only to system2");
    spec.p_av = require_key(j, "p_av", "scenario").get<double>();
  }

  if (j.contains("schedule")) {
    const nlohmann::json& sched = j["schedule"];
    if (!sched.is_array() || sched.empty())
      throw config_error("config: scenario.schedule must be a nonempty array");
    spec.schedule.clear();
    for (const auto& entry : sched) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
          !entry[1].is_number_integer())
        throw config_error("config: schedule entries are [start_task, distribution_id] pairs");
      spec.schedule.push_back(
          {entry[0].get<std::int64_t>(), entry[1].get<int>()});
    }
  }

  if (spec.system == SystemKind::FiniteSupport) {
    const nlohmann::json& atoms = require_key(j, "atoms", "scenario");
    if (!atoms.is_array() || atoms.empty())
      throw config_error("config: scenario.atoms must be a nonempty array");
    for (const auto& atom : atoms) {
      if (!atom.is_object()) throw config_error("config: each atom must be an object");
      require_known_keys(atom, {"probability", "matrix"}, "scenario.atoms[]");
      FiniteSupportSpec::Atom parsed;
      parsed.probability = require_key(atom, "probability", "atom").get<double>();
      const nlohmann::json& matrix = require_key(atom, "matrix", "atom");
      if (!matrix.is_array() || matrix.empty())
        throw config_error("config: atom.matrix must be a nonempty array of rows");
      int n = -1;
      for (const auto& row : matrix) {
        if (!row.is_array() || row.size() < 2)
          throw config_error("config: matrix rows are [duration, reward, penalties...]");
        if (n < 0) {
          n = static_cast<int>(row.size()) - 2;
          parsed.matrix = TaskMatrix(n);
        } else if (static_cast<int>(row.size()) - 2 != n) {
          throw config_error("config: matrix rows must all have the same length");
        }
        std::vector<double> y;
        for (std::size_t i = 2; i < row.size(); ++i) y.push_back(row[i].get<double>());
        parsed.matrix.append_row(row[0].get<double>(), row[1].get<double>(),
                                 std::span<const double>(y));
      }
      spec.finite.atoms.push_back(std::move(parsed));
    }
  } else if (j.contains("atoms")) {
    throw config_error("config: atoms apply only to finite_support scenarios");
  }
  return spec;
}

inline Algorithm parse_algorithm(const nlohmann::json& j) {
  const std::string name = j.get<std::string>();
  if (name == "adaptive") return Algorithm::Adaptive;
  if (name == "greedy") return Algorithm::Greedy;
  if (name == "robbins_monro") return Algorithm::RobbinsMonro;
  if (name == "dpp_ratio") return Algorithm::DppRatio;
  throw config_error("config: algorithm must be adaptive, greedy, robbins_monro, or dpp_ratio");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("config: top level must be an object");
  detail::require_known_keys(j,
                             {"scenario", "algorithm", "params", "horizon", "replications", "seed",
                              "window", "threads", "slater_s", "output"},
                             "the top level");
  RunConfig cfg;

  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    const nlohmann::json& s = j["seed"];
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
      throw config_error("config: seed must be a nonnegative integer");
    seed = s.get<std::uint64_t>();
  }
  cfg.scenario = detail::parse_scenario(detail::require_key(j, "scenario", "the top level"), seed);
  cfg.algorithm = detail::parse_algorithm(detail::require_key(j, "algorithm", "the top level"));

  const nlohmann::json& horizon = detail::require_key(j, "horizon", "the top level");
  if (!horizon.is_number_integer() || horizon.get<std::int64_t>() < 1)
    throw config_error("config: horizon must be a positive integer");
  cfg.horizon = horizon.get<std::int64_t>();

  if (j.contains("replications")) {
    if (!j["replications"].is_number_integer() || j["replications"].get<std::int64_t>() < 1)
      throw config_error("config: replications must be a positive integer");
    cfg.replications = j["replications"].get<int>();
  }
  if (j.contains("window")) {
    if (!j["window"].is_number_integer() || j["window"].get<std::int64_t>() < 1)
      throw config_error("config: window must be a positive integer");
    cfg.window = j["window"].get<std::int64_t>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_integer() || j["threads"].get<std::int64_t>() < 1)
      throw config_error("config: threads must be a positive integer");
    cfg.threads = j["threads"].get<int>();
  }
  if (j.contains("slater_s")) cfg.slater_s = detail::as_positive_number(j["slater_s"], "slater_s");
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw config_error("config: output must be a string path");
    cfg.output = j["output"].get<std::string>();
  }

  try {
    cfg.scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: ") + e.what());
  }

  const Bounds bounds = scenario_bounds(cfg.scenario);
  if (j.contains("params")) {
    const nlohmann::json& p = j["params"];
    if (!p.is_object()) throw config_error("config: params must be an object");
    detail::require_known_keys(p, {"v", "alpha", "q", "w"}, "params");
    if (p.contains("v")) cfg.params.v = detail::as_positive_number(p["v"], "params.v");
    if (p.contains("w")) cfg.params.w = detail::as_positive_number(p["w"], "params.w");
    if (p.contains("q")) {
      if (!p["q"].is_array()) throw config_error("config: params.q must be an array");
      cfg.params.q.clear();
      for (const auto& qi : p["q"]) {
        if (!qi.is_number() || !(qi.get<double>() >= 0.0))
          throw config_error("config: params.q entries must be nonnegative numbers");
        cfg.params.q.push_back(qi.get<double>());
      }
    }
    if (p.contains("alpha")) {
      if (p["alpha"].is_string()) {
        if (p["alpha"].get<std::string>() != "auto")
          throw config_error("config: params.alpha must be a positive number or \"auto\"");
        cfg.alpha_auto = true;
      } else {
        cfg.params.alpha = detail::as_positive_number(p["alpha"], "params.alpha");
      }
    } else {
      cfg.alpha_auto = true;
    }
  } else {
    cfg.alpha_auto = true;
  }
  if (cfg.alpha_auto) cfg.params.alpha = tune_alpha(bounds);

  // Pairing rules between algorithm and scenario.
  const int n = bounds.n();
  if (cfg.algorithm == Algorithm::Adaptive && static_cast<int>(cfg.params.q.size()) != n)
    throw config_error(
        "config: adaptive runs need params.q with one entry per penalty dimension");
  if (cfg.algorithm != Algorithm::Adaptive && !cfg.params.q.empty() &&
      static_cast<int>(cfg.params.q.size()) != n)
    throw config_error("config: params.q does not match the scenario's penalty count");
  if (cfg.algorithm == Algorithm::RobbinsMonro && n != 0)
    throw config_error(
        "config: robbins_monro applies only to scenarios without penalty constraints");
  if (cfg.slater_s && n == 0)
    throw config_error("config: slater_s applies only to scenarios with penalties");

  try {
    cfg.params.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw config_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: invalid JSON in ") + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: malformed value in ") + path + ": " + e.what());
  }
}

inline EnsembleSummary run_from_config(const RunConfig& cfg) {
  return run_ensemble(cfg.scenario, cfg.algorithm, cfg.params, cfg.horizon, cfg.replications,
                      cfg.window, cfg.threads);
}

// Pause/resume serialization: every field of the controller state, with
// doubles emitted in shortest round-trip form so deserialization is
// bit-exact.
inline nlohmann::json controller_state_to_json(const ControllerState& state) {
  return nlohmann::json{{"Q", state.Q}, {"J", state.J}, {"gamma", state.gamma}, {"k", state.k}};
}

inline ControllerState controller_state_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("state: top level must be an object");
  detail::require_known_keys(j, {"Q", "J", "gamma", "k"}, "controller state");
  ControllerState state;
  state.Q = detail::require_key(j, "Q", "controller state").get<std::vector<double>>();
  state.J = detail::require_key(j, "J", "controller state").get<double>();
  state.gamma = detail::require_key(j, "gamma", "controller state").get<double>();
  state.k = detail::require_key(j, "k", "controller state").get<std::int64_t>();
  return state;
}

}  // namespace renewal
