#pragma once
// Replication runner and ensemble aggregator. Every per-step guarantee of
// the adaptive controller is asserted inline while running, replications are
// sampled from disjoint counter-based streams so they can run on any number
// of threads, and aggregation always merges in replication order, making
// results independent of the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "controller.hpp"
#include "core.hpp"
#include "metrics.hpp"
#include "scenarios.hpp"

namespace renewal {

enum class Algorithm { Adaptive, Greedy, RobbinsMonro, DppRatio };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Adaptive: return "adaptive";
    case Algorithm::Greedy: return "greedy";
    case Algorithm::RobbinsMonro: return "robbins_monro";
    case Algorithm::DppRatio: return "dpp_ratio";
  }
  return "unknown";
}

struct TraceRecord {
  std::int64_t k = 0;
  int row_index = 0;  // 0-based
  double T = 0.0;
  double R = 0.0;
  std::vector<double> Y;  // unweighted penalties of the chosen row
  double gamma = 0.0;     // adaptive: gamma[k]
  std::vector<double> Q;  // adaptive: Q[k+1] (capped); dpp: queues after update
  double J = 0.0;         // adaptive: J[k+1]
  double theta = 0.0;     // rm: iterate after update; dpp: running ratio after task
  StepDiagnostics diagnostics;  // adaptive only
};

struct Trace {
  Algorithm algorithm = Algorithm::Adaptive;
  int n = 0;
  std::vector<TraceRecord> records;
  ControllerState final_state;  // adaptive only
  bool rm_bounds_flag = false;  // rm iterate left [0, r_max/t_min]
};

namespace detail {

[[noreturn]] inline void fail_invariant(const char* what, std::uint64_t replication,
                                        std::int64_t k) {
  std::ostringstream msg;
  msg << "invariant violated: " << what << " (replication " << replication << ", task " << k
      << ")";
  throw invariant_violation(msg.str());
}

inline void check_adaptive_step(const ControllerState& before, const StepResult& res,
                                const AlgoParams& params, const DerivedConstants& consts,
                                double c_eff, std::uint64_t replication) {
  const std::int64_t k = before.k;
  const ControllerState& after = res.state;
  for (std::size_t i = 0; i < after.Q.size(); ++i) {
    if (after.Q[i] < 0.0 || after.Q[i] > params.q[i] * params.v)
      fail_invariant("queue left [0, q_i*v]", replication, k);
  }
  if (after.gamma < consts.gamma_min || after.gamma > consts.gamma_max)
    fail_invariant("gamma left [gamma_min, gamma_max]", replication, k);
  if (after.J < 0.0) fail_invariant("J went negative", replication, k);
  if (after.J > params.v * (consts.beta1 + consts.beta2) + 1e-9)
    fail_invariant("J exceeded v*(beta1+beta2)", replication, k);
  if (res.diagnostics.delta_L > res.diagnostics.drift_rhs + 1e-9)
    fail_invariant("drift exceeded its bound", replication, k);
  if (before.J >= params.v * consts.beta1 && after.gamma > before.gamma)
    fail_invariant("gamma increased while J >= v*beta1", replication, k);
  if (std::abs(res.diagnostics.Z_after - res.diagnostics.Z) > c_eff + 1e-9)
    fail_invariant("queue norm moved more than c per task", replication, k);
}

}  // namespace detail

// Runs one replication and returns its full per-task trace. Adaptive runs
// assert every per-step guarantee inline and throw invariant_violation on
// the first breach.
inline Trace run_replication(const ScenarioSpec& spec, Algorithm algorithm,
                             const AlgoParams& params, std::int64_t horizon,
                             std::uint64_t replication) {
  spec.validate();
  params.validate();
  if (horizon < 1) throw std::invalid_argument("run_replication: horizon must be >= 1");
  const Bounds bounds = scenario_bounds(spec);
  const int n = bounds.n();

  Trace trace;
  trace.algorithm = algorithm;
  trace.n = n;
  trace.records.reserve(static_cast<std::size_t>(horizon));

  switch (algorithm) {
    case Algorithm::Adaptive: {
      if (static_cast<int>(params.q.size()) != n)
        throw std::invalid_argument("run_replication: adaptive runs need one queue bound per penalty");
      const DerivedConstants consts = derive_constants(bounds, params);
      const double c_eff = params.w * bounds.c;
      ControllerState state = initial_state(params, consts);
      for (std::int64_t k = 1; k <= horizon; ++k) {
        const TaskMatrix A = sample_task(spec, replication, k);
        StepResult res = step(state, A, params, consts, bounds);
        detail::check_adaptive_step(state, res, params, consts, c_eff, replication);
        TraceRecord rec;
        rec.k = k;
        rec.row_index = res.decision.row_index;
        rec.T = res.decision.T;
        rec.R = res.decision.R;
        rec.Y = std::move(res.decision.Y);
        rec.gamma = res.state.gamma;
        rec.Q = res.state.Q;
        rec.J = res.state.J;
        rec.diagnostics = std::move(res.diagnostics);
        trace.records.push_back(std::move(rec));
        state = std::move(res.state);
      }
      trace.final_state = std::move(state);
      break;
    }
    case Algorithm::Greedy: {
      std::function<bool(const TaskMatrix&, int)> filter;
      if (n > 0) {
        filter = [n](const TaskMatrix& A, int r) {
          for (int i = 0; i < n; ++i)
            if (A.penalty(r, i) > 0.0) return false;
          return true;
        };
      }
      for (std::int64_t k = 1; k <= horizon; ++k) {
        const TaskMatrix A = sample_task(spec, replication, k);
        Decision dec = greedy_step(A, filter);
        TraceRecord rec;
        rec.k = k;
        rec.row_index = dec.row_index;
        rec.T = dec.T;
        rec.R = dec.R;
        rec.Y = std::move(dec.Y);
        trace.records.push_back(std::move(rec));
      }
      break;
    }
    case Algorithm::RobbinsMonro: {
      if (n != 0)
        throw std::invalid_argument(
            "run_replication: the ratio tracker applies only to systems without penalties");
      const double theta_cap = bounds.r_max / bounds.t_min;
      RmState state;
      for (std::int64_t k = 1; k <= horizon; ++k) {
        const TaskMatrix A = sample_task(spec, replication, k);
        auto [dec, next] = robbins_monro_step(state, A);
        if (next.theta < -1e-9 || next.theta > theta_cap + 1e-9) trace.rm_bounds_flag = true;
        TraceRecord rec;
        rec.k = k;
        rec.row_index = dec.row_index;
        rec.T = dec.T;
        rec.R = dec.R;
        rec.theta = next.theta;
        trace.records.push_back(std::move(rec));
        state = next;
      }
      break;
    }
    case Algorithm::DppRatio: {
      const double theta_cap = bounds.r_max / bounds.t_min;
      DppState state = initial_dpp_state(n);
      for (std::int64_t k = 1; k <= horizon; ++k) {
        const TaskMatrix A = sample_task(spec, replication, k);
        auto [dec, next] = dpp_ratio_step(state, A, params.v);
        const double theta = next.cum_R / next.cum_T;
        if (theta < -1e-9 || theta > theta_cap * (1.0 + 1e-12) + 1e-9)
          detail::fail_invariant("running ratio left [0, r_max/t_min]", replication, k);
        TraceRecord rec;
        rec.k = k;
        rec.row_index = dec.row_index;
        rec.T = dec.T;
        rec.R = dec.R;
        rec.Y = std::move(dec.Y);
        rec.Q = next.Q;
        rec.theta = theta;
        double norm_sq = 0.0;
        for (double q : next.Q) norm_sq += q * q;
        rec.diagnostics.Z_after = std::sqrt(norm_sq);
        trace.records.push_back(std::move(rec));
        state = std::move(next);
      }
      break;
    }
  }
  return trace;
}

struct EnsembleSummary {
  std::int64_t horizon = 0;
  int replications = 0;
  std::int64_t window = 200;
  int n = 0;
  bool has_power = false;
  double p_av = 0.0;
  std::vector<double> mean_R, mean_T, mean_J, mean_normQ;
  std::vector<std::vector<double>> mean_Y;  // [penalty][task]
  std::vector<double> cum_ratio;            // ensemble ratio of means through task k
  std::vector<double> window_ratio;         // over the last `window` tasks; NaN while filling
  std::vector<double> power_ratio;          // only when has_power
  bool rm_flag = false;
  std::uint64_t fingerprint = 0;

  std::string fingerprint_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint));
    return buf;
  }
};

namespace detail {

struct RepSeries {
  std::vector<double> R, T, J, normQ;
  std::vector<std::vector<double>> Y;
  bool rm_flag = false;
};

inline RepSeries reduce_trace(const Trace& trace, int n) {
  RepSeries s;
  const std::size_t h = trace.records.size();
  s.R.resize(h);
  s.T.resize(h);
  s.J.resize(h);
  s.normQ.resize(h);
  s.Y.assign(static_cast<std::size_t>(n), std::vector<double>(h));
  for (std::size_t j = 0; j < h; ++j) {
    const TraceRecord& rec = trace.records[j];
    s.R[j] = rec.R;
    s.T[j] = rec.T;
    s.J[j] = rec.J;
    s.normQ[j] = rec.diagnostics.Z_after;
    for (int i = 0; i < n; ++i) s.Y[static_cast<std::size_t>(i)][j] = rec.Y[static_cast<std::size_t>(i)];
  }
  s.rm_flag = trace.rm_bounds_flag;
  return s;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

inline void describe_double(std::ostringstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

inline std::string describe_run(const ScenarioSpec& spec, Algorithm algorithm,
                                const AlgoParams& params, std::int64_t horizon, int replications,
                                std::int64_t window) {
  std::ostringstream os;
  os << "system=" << static_cast<int>(spec.system) << ";schedule=";
  for (const SchedulePoint& p : spec.schedule) os << p.start_task << ":" << p.distribution_id << ",";
  os << ";p_av=";
  describe_double(os, spec.p_av);
  os << ";seed=" << spec.seed << ";atoms=";
  if (spec.system == SystemKind::FiniteSupport) {
    for (const auto& atom : spec.finite.atoms) {
      describe_double(os, atom.probability);
      os << "{";
      for (int r = 0; r < atom.matrix.rows(); ++r) {
        describe_double(os, atom.matrix.duration(r));
        os << ",";
        describe_double(os, atom.matrix.reward(r));
        for (int i = 0; i < atom.matrix.n(); ++i) {
          os << ",";
          describe_double(os, atom.matrix.penalty(r, i));
        }
        os << "|";
      }
      os << "}";
    }
  }
  os << ";alg=" << algorithm_name(algorithm) << ";v=";
  describe_double(os, params.v);
  os << ";alpha=";
  describe_double(os, params.alpha);
  os << ";q=";
  for (double q : params.q) {
    describe_double(os, q);
    os << ",";
  }
  os << ";w=";
  describe_double(os, params.w);
  os << ";horizon=" << horizon << ";replications=" << replications << ";window=" << window;
  return os.str();
}

}  // namespace detail

// Runs `replications` independent replications (each on its own counter
// stream) and averages per-task series across them. Merging happens in
// replication order no matter how work is scheduled, so any `threads` value
// produces bitwise-identical summaries.
inline EnsembleSummary run_ensemble(const ScenarioSpec& spec, Algorithm algorithm,
                                    const AlgoParams& params, std::int64_t horizon,
                                    int replications, std::int64_t window = 200, int threads = 1) {
  spec.validate();
  if (replications < 1) throw std::invalid_argument("run_ensemble: replications must be >= 1");
  if (window < 1) throw std::invalid_argument("run_ensemble: window must be >= 1");
  if (threads < 1) throw std::invalid_argument("run_ensemble: threads must be >= 1");
  const Bounds bounds = scenario_bounds(spec);
  const int n = bounds.n();
  const std::size_t h = static_cast<std::size_t>(horizon);

  EnsembleSummary out;
  out.horizon = horizon;
  out.replications = replications;
  out.window = window;
  out.n = n;
  out.has_power = spec.has_energy();
  out.p_av = spec.p_av;
  out.fingerprint =
      detail::fnv1a(detail::describe_run(spec, algorithm, params, horizon, replications, window));

  std::vector<double> sum_R(h, 0.0), sum_T(h, 0.0), sum_J(h, 0.0), sum_normQ(h, 0.0);
  std::vector<std::vector<double>> sum_Y(static_cast<std::size_t>(n),
                                         std::vector<double>(h, 0.0));
  bool rm_flag = false;

  {
    std::mutex mu;
    std::vector<std::optional<detail::RepSeries>> slots(static_cast<std::size_t>(replications));
    int next_merge = 0;
    std::atomic<int> next_rep{0};
    std::exception_ptr first_error;

    const auto merge_ready = [&]() {  // caller holds mu
      while (next_merge < replications && slots[static_cast<std::size_t>(next_merge)]) {
        const detail::RepSeries& s = *slots[static_cast<std::size_t>(next_merge)];
        for (std::size_t j = 0; j < h; ++j) {
          sum_R[j] += s.R[j];
          sum_T[j] += s.T[j];
          sum_J[j] += s.J[j];
          sum_normQ[j] += s.normQ[j];
        }
        for (int i = 0; i < n; ++i)
          for (std::size_t j = 0; j < h; ++j)
            sum_Y[static_cast<std::size_t>(i)][j] += s.Y[static_cast<std::size_t>(i)][j];
        rm_flag = rm_flag || s.rm_flag;
        slots[static_cast<std::size_t>(next_merge)].reset();
        ++next_merge;
      }
    };
    const auto worker = [&]() {
      for (;;) {
        const int rep = next_rep.fetch_add(1);
        if (rep >= replications) return;
        try {
          Trace trace = run_replication(spec, algorithm, params, horizon,
                                        static_cast<std::uint64_t>(rep));
          detail::RepSeries series = detail::reduce_trace(trace, n);
          std::lock_guard<std::mutex> lock(mu);
          slots[static_cast<std::size_t>(rep)] = std::move(series);
          merge_ready();
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };

    const int nthreads = std::min<int>(threads, replications);
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(nthreads));
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  out.mean_R.resize(h);
  out.mean_T.resize(h);
  out.mean_J.resize(h);
  out.mean_normQ.resize(h);
  out.mean_Y.assign(static_cast<std::size_t>(n), std::vector<double>(h));
  const double inv = 1.0 / static_cast<double>(replications);
  for (std::size_t j = 0; j < h; ++j) {
    out.mean_R[j] = sum_R[j] * inv;
    out.mean_T[j] = sum_T[j] * inv;
    out.mean_J[j] = sum_J[j] * inv;
    out.mean_normQ[j] = sum_normQ[j] * inv;
  }
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < h; ++j)
      out.mean_Y[static_cast<std::size_t>(i)][j] = sum_Y[static_cast<std::size_t>(i)][j] * inv;
  out.rm_flag = rm_flag;

  out.cum_ratio.resize(h);
  out.window_ratio.assign(h, std::numeric_limits<double>::quiet_NaN());
  if (out.has_power) out.power_ratio.resize(h);
  double cr = 0.0, ct = 0.0, ce = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    cr += out.mean_R[j];
    ct += out.mean_T[j];
    out.cum_ratio[j] = cr / ct;
    if (out.has_power) {
      ce += out.mean_Y[0][j] + spec.p_av * out.mean_T[j];
      out.power_ratio[j] = ce / ct;
    }
    if (static_cast<std::int64_t>(j) + 1 > window) {
      // ratio over tasks j+2-window .. j+1 (1-based), i.e. the last `window`.
      double wr = 0.0, wt = 0.0;
      for (std::size_t l = j + 1 - static_cast<std::size_t>(window); l <= j; ++l) {
        wr += out.mean_R[l];
        wt += out.mean_T[l];
      }
      out.window_ratio[j] = wr / wt;
    }
  }
  return out;
}

// CSV schema: k, mean_R, mean_T, mean_Y_1..n, cum_ratio, window_ratio
// (blank while the window is filling), power_ratio (only for scenarios with
// energy semantics), mean_J, mean_normQ. Numbers are %.17g so parsing the
// file back reproduces every double bit-exactly; newlines are LF.
inline void emit_csv(const EnsembleSummary& summary, std::ostream& os) {
  if (summary.horizon < 1 || summary.replications < 1 || summary.mean_R.empty())
    throw std::invalid_argument("emit_csv: empty summary");
  os << "k,mean_R,mean_T";
  for (int i = 0; i < summary.n; ++i) os << ",mean_Y_" << (i + 1);
  os << ",cum_ratio,window_ratio";
  if (summary.has_power) os << ",power_ratio";
  os << ",mean_J,mean_normQ\n";
  char buf[32];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t j = 0; j < summary.mean_R.size(); ++j) {
    os << (j + 1);
    put(summary.mean_R[j]);
    put(summary.mean_T[j]);
    for (int i = 0; i < summary.n; ++i) put(summary.mean_Y[static_cast<std::size_t>(i)][j]);
    put(summary.cum_ratio[j]);
    if (std::isnan(summary.window_ratio[j]))
      os << ',';
    else
      put(summary.window_ratio[j]);
    if (summary.has_power) put(summary.power_ratio[j]);
    put(summary.mean_J[j]);
    put(summary.mean_normQ[j]);
    os << '\n';
  }
  if (!os) throw std::runtime_error("emit_csv: write failed");
}

inline void emit_csv(const EnsembleSummary& summary, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("emit_csv: cannot open " + path);
  emit_csv(summary, file);
  file.flush();
  if (!file) throw std::runtime_error("emit_csv: write failed for " + path);
}

}  // namespace renewal
