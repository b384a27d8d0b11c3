#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renewal/config.hpp"
#include "renewal/controller.hpp"
#include "renewal/core.hpp"
#include "renewal/harness.hpp"
#include "renewal/metrics.hpp"
#include "renewal/scenarios.hpp"

using Catch::Matchers::WithinAbs;
using namespace renewal;

namespace {

ScenarioSpec system1_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.system = SystemKind::System1;
  spec.seed = seed;
  return spec;
}

ScenarioSpec system2_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.system = SystemKind::System2;
  spec.seed = seed;
  return spec;
}

bool same_series(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool both_nan = std::isnan(a[i]) && std::isnan(b[i]);
    if (!both_nan && a[i] != b[i]) return false;
  }
  return true;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("running ratios divide summed reward by summed duration") {
  const std::vector<double> r1 = {2.0};
  const std::vector<double> t1 = {4.0};
  REQUIRE(cumulative_ratio(r1, t1, 1) == 0.5);

  const std::vector<double> r2 = {3.0, 1.0};
  const std::vector<double> t2 = {1.0, 1.0};
  REQUIRE(cumulative_ratio(r2, t2, 2) == 2.0);

  const std::vector<double> r3 = {6.0, 6.0, 6.0};
  const std::vector<double> t3 = {2.0, 2.0, 2.0};
  REQUIRE(cumulative_ratio(r3, t3, 3) == 3.0);
  REQUIRE(cumulative_ratio(r3, t3, 1) == 3.0);

  REQUIRE_THROWS_AS(cumulative_ratio(r3, t3, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(cumulative_ratio(r3, t3, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(cumulative_ratio(r2, t3, 2), std::invalid_argument);
  const std::vector<double> bad_t = {0.0, 0.0};
  REQUIRE_THROWS_AS(cumulative_ratio(r2, bad_t, 2), std::invalid_argument);
}

TEST_CASE("window ratios cover the tasks just before the anchor") {
  const std::vector<double> r = {0.0, 4.0, 8.0};
  const std::vector<double> t = {1.0, 1.0, 1.0};
  REQUIRE(window_ratio(r, t, 3, 2) == 2.0);  // tasks 1..2
  REQUIRE(window_ratio(r, t, 4, 2) == 6.0);  // tasks 2..3
  REQUIRE(window_ratio(r, t, 4, 3) == 4.0);
  REQUIRE_THROWS_AS(window_ratio(r, t, 2, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(window_ratio(r, t, 5, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(window_ratio(r, t, 3, 0), std::invalid_argument);
}

TEST_CASE("power ratio recovers energy per unit time") {
  const std::vector<double> y0 = {0.0, 0.0};
  const std::vector<double> t = {2.0, 3.0};
  REQUIRE_THAT(power_ratio(y0, t, 0.4, 2), WithinAbs(0.4, 1e-12));

  // Idle rows of the energy system: Y = 0 - p_av * 1.
  const std::vector<double> idle_y = {-1.0 / 3.0, -1.0 / 3.0};
  const std::vector<double> idle_t = {1.0, 1.0};
  REQUIRE_THAT(power_ratio(idle_y, idle_t, 1.0 / 3.0, 2), WithinAbs(0.0, 1e-12));
}

TEST_CASE("adaptive replications populate full traces") {
  AlgoParams params;
  params.v = 10.0;
  const Trace trace = run_replication(system1_spec(5), Algorithm::Adaptive, params, 100, 0);
  REQUIRE(trace.records.size() == 100);
  REQUIRE(trace.n == 0);
  REQUIRE(trace.final_state.k == 101);
  for (std::size_t j = 0; j < trace.records.size(); ++j) {
    const TraceRecord& rec = trace.records[j];
    REQUIRE(rec.k == static_cast<std::int64_t>(j + 1));
    REQUIRE(rec.gamma >= 0.1);
    REQUIRE(rec.gamma <= 1.0);
    REQUIRE(rec.J >= 0.0);
    REQUIRE(rec.T >= 1.0);
    REQUIRE(rec.T <= 10.0);
    REQUIRE(rec.Q.empty());
  }

  AlgoParams p2;
  p2.v = 50.0;
  p2.q = {4.0};
  const Trace t2 = run_replication(system2_spec(5), Algorithm::Adaptive, p2, 50, 1);
  REQUIRE(t2.n == 1);
  for (const TraceRecord& rec : t2.records) {
    REQUIRE(rec.Q.size() == 1);
    REQUIRE(rec.Q[0] >= 0.0);
    REQUIRE(rec.Q[0] <= 200.0);
    REQUIRE(rec.diagnostics.indicators.size() == 1);
  }

  REQUIRE_THROWS_AS(run_replication(system1_spec(5), Algorithm::Adaptive, params, 0, 0),
                    std::invalid_argument);
}

TEST_CASE("replications are deterministic in every field") {
  AlgoParams params;
  params.v = 25.0;
  params.q = {2.0};
  const Trace a = run_replication(system2_spec(17), Algorithm::Adaptive, params, 200, 3);
  const Trace b = run_replication(system2_spec(17), Algorithm::Adaptive, params, 200, 3);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t j = 0; j < a.records.size(); ++j) {
    REQUIRE(a.records[j].row_index == b.records[j].row_index);
    REQUIRE(a.records[j].T == b.records[j].T);
    REQUIRE(a.records[j].R == b.records[j].R);
    REQUIRE(a.records[j].gamma == b.records[j].gamma);
    REQUIRE(a.records[j].J == b.records[j].J);
    REQUIRE(a.records[j].Q == b.records[j].Q);
    REQUIRE(a.records[j].diagnostics.delta_L == b.records[j].diagnostics.delta_L);
  }
}

TEST_CASE("greedy on a constrained system only picks compliant rows") {
  const Trace trace = run_replication(system2_spec(9), Algorithm::Greedy, {}, 300, 0);
  for (const TraceRecord& rec : trace.records) REQUIRE(rec.Y[0] <= 0.0);
}

TEST_CASE("reward rate iteration stays inside its natural interval here") {
  const Trace trace = run_replication(system1_spec(11), Algorithm::RobbinsMonro, {}, 500, 0);
  REQUIRE_FALSE(trace.rm_bounds_flag);
  for (const TraceRecord& rec : trace.records) {
    REQUIRE(rec.theta >= 0.0);
    REQUIRE(rec.theta <= 500.0);
  }
  REQUIRE_THROWS_AS(run_replication(system2_spec(11), Algorithm::RobbinsMonro, {}, 10, 0),
                    std::invalid_argument);
}

TEST_CASE("ratio-tracking queue runs report the running ratio") {
  AlgoParams params;
  params.v = 50.0;
  const Trace trace = run_replication(system2_spec(13), Algorithm::DppRatio, params, 100, 0);
  double cr = 0.0, ct = 0.0;
  for (const TraceRecord& rec : trace.records) {
    cr += rec.R;
    ct += rec.T;
    REQUIRE(rec.theta == cr / ct);
    REQUIRE(rec.Q[0] >= 0.0);
  }
}

TEST_CASE("thread count never changes ensemble output") {
  AlgoParams params;
  params.v = 50.0;
  params.q = {2.0};
  const EnsembleSummary one =
      run_ensemble(system2_spec(21), Algorithm::Adaptive, params, 300, 8, 50, 1);
  const EnsembleSummary four =
      run_ensemble(system2_spec(21), Algorithm::Adaptive, params, 300, 8, 50, 4);
  REQUIRE(one.fingerprint == four.fingerprint);
  REQUIRE(one.mean_R == four.mean_R);
  REQUIRE(one.mean_T == four.mean_T);
  REQUIRE(one.mean_J == four.mean_J);
  REQUIRE(one.mean_normQ == four.mean_normQ);
  REQUIRE(one.mean_Y == four.mean_Y);
  REQUIRE(one.cum_ratio == four.cum_ratio);
  REQUIRE(one.power_ratio == four.power_ratio);
  REQUIRE(same_series(one.window_ratio, four.window_ratio));

  std::ostringstream s1, s4;
  emit_csv(one, s1);
  emit_csv(four, s4);
  REQUIRE(s1.str() == s4.str());

  const EnsembleSummary other_seed =
      run_ensemble(system2_spec(22), Algorithm::Adaptive, params, 300, 8, 50, 1);
  REQUIRE(other_seed.fingerprint != one.fingerprint);
}

TEST_CASE("ensemble means are plain replication averages") {
  AlgoParams params;
  params.v = 10.0;
  const int reps = 3;
  const std::int64_t horizon = 50;
  const EnsembleSummary sum =
      run_ensemble(system1_spec(31), Algorithm::Adaptive, params, horizon, reps, 10, 2);

  std::vector<double> acc_R(static_cast<std::size_t>(horizon), 0.0);
  std::vector<double> acc_T(static_cast<std::size_t>(horizon), 0.0);
  std::vector<double> acc_J(static_cast<std::size_t>(horizon), 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    const Trace t = run_replication(system1_spec(31), Algorithm::Adaptive, params, horizon,
                                    static_cast<std::uint64_t>(rep));
    for (std::size_t j = 0; j < t.records.size(); ++j) {
      acc_R[j] += t.records[j].R;
      acc_T[j] += t.records[j].T;
      acc_J[j] += t.records[j].J;
    }
  }
  const double inv = 1.0 / static_cast<double>(reps);
  for (std::size_t j = 0; j < acc_R.size(); ++j) {
    REQUIRE(sum.mean_R[j] == acc_R[j] * inv);
    REQUIRE(sum.mean_T[j] == acc_T[j] * inv);
    REQUIRE(sum.mean_J[j] == acc_J[j] * inv);
  }
  // Ensemble running ratio through task k uses the same summed series.
  double cr = 0.0, ct = 0.0;
  for (std::size_t j = 0; j < acc_R.size(); ++j) {
    cr += sum.mean_R[j];
    ct += sum.mean_T[j];
    REQUIRE(sum.cum_ratio[j] == cr / ct);
  }
}

TEST_CASE("a one-task ensemble equals a fresh controller step") {
  const ScenarioSpec spec = system1_spec(41);
  AlgoParams params;
  params.v = 10.0;
  const EnsembleSummary sum = run_ensemble(spec, Algorithm::Adaptive, params, 1, 1, 200, 1);

  const Bounds bounds = scenario_bounds(spec);
  const DerivedConstants consts = derive_constants(bounds, params);
  const TaskMatrix A = sample_task(spec, 0, 1);
  const StepResult res = step(initial_state(params, consts), A, params, consts, bounds);
  REQUIRE(sum.mean_R[0] == res.decision.R);
  REQUIRE(sum.mean_T[0] == res.decision.T);
  REQUIRE(sum.mean_J[0] == res.state.J);
  REQUIRE(sum.cum_ratio[0] == res.decision.R / res.decision.T);
  REQUIRE(std::isnan(sum.window_ratio[0]));

  REQUIRE_THROWS_AS(run_ensemble(spec, Algorithm::Adaptive, params, 1, 0, 200, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_ensemble(spec, Algorithm::Adaptive, params, 1, 1, 0, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_ensemble(spec, Algorithm::Adaptive, params, 1, 1, 200, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_ensemble(spec, Algorithm::Adaptive, params, 0, 1, 200, 1),
                    std::invalid_argument);
}

TEST_CASE("energy scenarios publish a power ratio around the budget") {
  AlgoParams params;
  params.v = 50.0;
  params.q = {2.0};
  const EnsembleSummary sum =
      run_ensemble(system2_spec(51), Algorithm::Adaptive, params, 400, 4, 100, 2);
  REQUIRE(sum.has_power);
  REQUIRE(sum.p_av == 1.0 / 3.0);
  REQUIRE(sum.power_ratio.size() == 400);
  // Power = Y + p_av*T per task, so the ratio stays within the row range.
  REQUIRE(sum.power_ratio.back() > 0.0);
  REQUIRE(sum.power_ratio.back() < 1.0);

  const EnsembleSummary plain =
      run_ensemble(system1_spec(51), Algorithm::Greedy, {}, 10, 1, 200, 1);
  REQUIRE_FALSE(plain.has_power);
  REQUIRE(plain.power_ratio.empty());
}

TEST_CASE("csv output is parse-back exact and shaped by the scenario") {
  AlgoParams params;
  params.v = 10.0;
  const EnsembleSummary s1 = run_ensemble(system1_spec(61), Algorithm::Adaptive, params, 2, 1);
  std::ostringstream os;
  emit_csv(s1, os);
  std::istringstream in(os.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "k,mean_R,mean_T,cum_ratio,window_ratio,mean_J,mean_normQ");
  REQUIRE(std::getline(in, line));
  auto fields = split_csv(line);
  REQUIRE(fields.size() == 7);
  REQUIRE(fields[0] == "1");
  REQUIRE(std::stod(fields[1]) == s1.mean_R[0]);
  REQUIRE(std::stod(fields[2]) == s1.mean_T[0]);
  REQUIRE(std::stod(fields[3]) == s1.cum_ratio[0]);
  REQUIRE(fields[4].empty());  // window still filling
  REQUIRE(std::getline(in, line));
  REQUIRE(split_csv(line)[0] == "2");
  REQUIRE_FALSE(std::getline(in, line));

  AlgoParams p2;
  p2.v = 50.0;
  p2.q = {2.0};
  const EnsembleSummary s2 = run_ensemble(system2_spec(62), Algorithm::Adaptive, p2, 5, 2, 2, 1);
  std::ostringstream os2;
  emit_csv(s2, os2);
  std::istringstream in2(os2.str());
  REQUIRE(std::getline(in2, line));
  REQUIRE(line == "k,mean_R,mean_T,mean_Y_1,cum_ratio,window_ratio,power_ratio,mean_J,mean_normQ");
  std::getline(in2, line);
  std::getline(in2, line);
  std::getline(in2, line);  // k = 3: first task past the window
  fields = split_csv(line);
  REQUIRE(fields.size() == 9);
  REQUIRE(std::stod(fields[5]) == s2.window_ratio[2]);
  REQUIRE(std::stod(fields[6]) == s2.power_ratio[2]);

  // The file writer emits exactly the stream bytes.
  const std::string path = "csv_roundtrip_test.csv";
  emit_csv(s2, path);
  std::ifstream file(path, std::ios::binary);
  std::stringstream bytes;
  bytes << file.rdbuf();
  REQUIRE(bytes.str() == os2.str());
  std::remove(path.c_str());

  REQUIRE_THROWS_AS(emit_csv(EnsembleSummary{}, os), std::invalid_argument);
}

TEST_CASE("configs parse with strict keys and auto-tuned curvature") {
  const auto j = nlohmann::json::parse(R"({
    "scenario": {"system": "system2"},
    "algorithm": "adaptive",
    "params": {"v": 50, "q": [2.0]},
    "horizon": 1000,
    "replications": 4,
    "seed": 7,
    "window": 100,
    "threads": 2,
    "slater_s": 2.5
  })");
  const RunConfig cfg = parse_config(j);
  REQUIRE(cfg.algorithm == Algorithm::Adaptive);
  REQUIRE(cfg.horizon == 1000);
  REQUIRE(cfg.replications == 4);
  REQUIRE(cfg.window == 100);
  REQUIRE(cfg.threads == 2);
  REQUIRE(cfg.scenario.seed == 7);
  REQUIRE(cfg.params.v == 50.0);
  REQUIRE(cfg.alpha_auto);
  REQUIRE(cfg.params.alpha == tune_alpha(scenario_bounds(cfg.scenario)));
  REQUIRE(cfg.slater_s.has_value());
  REQUIRE(*cfg.slater_s == 2.5);

  auto explicit_alpha = j;
  explicit_alpha["params"]["alpha"] = 3.5;
  REQUIRE(parse_config(explicit_alpha).params.alpha == 3.5);
  REQUIRE_FALSE(parse_config(explicit_alpha).alpha_auto);
  auto auto_alpha = j;
  auto_alpha["params"]["alpha"] = "auto";
  REQUIRE(parse_config(auto_alpha).alpha_auto);
}

TEST_CASE("configs reject unknown keys and bad pairings") {
  const std::string base = R"({
    "scenario": {"system": "system1"},
    "algorithm": "greedy",
    "horizon": 10
  })";
  REQUIRE_NOTHROW(parse_config(nlohmann::json::parse(base)));

  auto mutate = [&](const char* pointer, nlohmann::json value) {
    nlohmann::json j = nlohmann::json::parse(base);
    j[nlohmann::json::json_pointer(pointer)] = std::move(value);
    return j;
  };

  REQUIRE_THROWS_AS(parse_config(mutate("/horizons", 10)), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/scenario/systems", "system1")), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/params/vv", 1.0)), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/scenario/p_av", 0.5)), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/scenario/atoms", nlohmann::json::array())), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/slater_s", 1.0)), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/seed", -1)), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/algorithm", "newton")), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/params/alpha", "none")), config_error);
  REQUIRE_THROWS_AS(parse_config(mutate("/params/alpha", -1.0)), config_error);

  nlohmann::json missing = nlohmann::json::parse(base);
  missing.erase("horizon");
  REQUIRE_THROWS_AS(parse_config(missing), config_error);

  // Algorithm/scenario pairings.
  nlohmann::json rm = nlohmann::json::parse(base);
  rm["scenario"]["system"] = "system2";
  rm["algorithm"] = "robbins_monro";
  REQUIRE_THROWS_AS(parse_config(rm), config_error);

  nlohmann::json adaptive_no_q = nlohmann::json::parse(base);
  adaptive_no_q["scenario"]["system"] = "system2";
  adaptive_no_q["algorithm"] = "adaptive";
  REQUIRE_THROWS_AS(parse_config(adaptive_no_q), config_error);

  nlohmann::json q_mismatch = nlohmann::json::parse(base);
  q_mismatch["params"] = {{"q", {1.0, 2.0}}};
  REQUIRE_THROWS_AS(parse_config(q_mismatch), config_error);
}

TEST_CASE("finite support scenarios parse from explicit atoms") {
  const auto j = nlohmann::json::parse(R"({
    "scenario": {
      "system": "finite_support",
      "atoms": [
        {"probability": 0.5, "matrix": [[1.0, 0.0, -0.5], [2.0, 3.0, 0.5]]},
        {"probability": 0.5, "matrix": [[1.0, 1.0, -1.0]]}
      ]
    },
    "algorithm": "adaptive",
    "params": {"v": 5, "q": [1.0]},
    "horizon": 50
  })");
  const RunConfig cfg = parse_config(j);
  REQUIRE(cfg.scenario.system == SystemKind::FiniteSupport);
  REQUIRE(cfg.scenario.finite.atoms.size() == 2);
  REQUIRE(cfg.scenario.finite.atoms[0].matrix.rows() == 2);
  REQUIRE(cfg.scenario.finite.atoms[0].matrix.penalty(1, 0) == 0.5);

  auto ragged = j;
  ragged["scenario"]["atoms"][0]["matrix"][1] = {2.0, 3.0};
  REQUIRE_THROWS_AS(parse_config(ragged), config_error);
  auto bad_atom_key = j;
  bad_atom_key["scenario"]["atoms"][0]["prob"] = 0.5;
  REQUIRE_THROWS_AS(parse_config(bad_atom_key), config_error);

  const EnsembleSummary sum = run_from_config(cfg);
  REQUIRE(sum.horizon == 50);
  REQUIRE(sum.replications == 1);
  REQUIRE(sum.mean_R.size() == 50);
}

TEST_CASE("config files surface IO and syntax problems") {
  REQUIRE_THROWS_AS(load_config_file("definitely_missing.json"), config_error);
  const std::string path = "broken_config_test.json";
  {
    std::ofstream out(path);
    out << "not json at all";
  }
  REQUIRE_THROWS_AS(load_config_file(path), config_error);
  std::remove(path.c_str());
}

TEST_CASE("controller state survives a json round trip bit for bit") {
  ControllerState st;
  st.Q = {0.1, 1.0 / 3.0};
  st.J = 0.7000000000000001;
  st.gamma = std::nextafter(0.1, 1.0);
  st.k = 123456789012345;
  const std::string text = controller_state_to_json(st).dump();
  const ControllerState back = controller_state_from_json(nlohmann::json::parse(text));
  REQUIRE(back.Q == st.Q);
  REQUIRE(back.J == st.J);
  REQUIRE(back.gamma == st.gamma);
  REQUIRE(back.k == st.k);

  auto j = controller_state_to_json(st);
  j["extra"] = 1;
  REQUIRE_THROWS_AS(controller_state_from_json(j), config_error);
  auto partial = controller_state_to_json(st);
  partial.erase("J");
  REQUIRE_THROWS_AS(controller_state_from_json(partial), config_error);
}
