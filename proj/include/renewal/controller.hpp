#pragma once
// The adaptive per-task controller: row selection, auxiliary-variable update,
// capped virtual-queue updates, and per-step diagnostics that make every
// guarantee directly assertable on a running system.

#include <cmath>
#include <cstdint>
#include <vector>

#include "core.hpp"

namespace renewal {

struct ControllerState {
  std::vector<double> Q;  // capped penalty queues, Q_i in [0, q_i*v]
  double J = 0.0;         // duration queue, J >= 0
  double gamma = 0.0;     // gamma[k-1] entering task k
  std::int64_t k = 1;     // next task index
};

inline ControllerState initial_state(const AlgoParams& params, const DerivedConstants& consts) {
  ControllerState st;
  st.Q.assign(params.q.size(), 0.0);
  st.gamma = consts.gamma_min;
  return st;
}

struct Decision {
  int row_index = 0;  // 0-based internally
  double T = 0.0;
  double R = 0.0;
  std::vector<double> Y;  // unweighted penalties of the selected row

  int row_number() const { return row_index + 1; }  // 1-based for reporting
};

struct StepDiagnostics {
  double L_before = 0.0;  // (1/2)J^2 + (1/2)||Q||^2 entering the task
  double L_after = 0.0;
  double delta_L = 0.0;  // L_after - L_before, exactly as computed
  double Z = 0.0;        // ||Q|| entering the task
  double Z_after = 0.0;
  std::vector<std::uint8_t> indicators;  // 1_i: Q_i > q_i*v - w*y_i_max entering the task
  double gamma_objective_value = 0.0;    // chosen gamma's quadratic objective value
  double drift_rhs = 0.0;                // b + J(T - 1/gamma) + Q.(wY)
};

namespace detail {

// Objective of row r: -v*R + J*T + Q.(w*Y).
inline double row_objective(const TaskMatrix& A, int r, const ControllerState& state,
                            const AlgoParams& params) {
  double obj = -params.v * A.reward(r) + state.J * A.duration(r);
  for (int i = 0; i < A.n(); ++i) obj += state.Q[static_cast<std::size_t>(i)] * params.w * A.penalty(r, i);
  return obj;
}

inline double queue_penalty_product(const ControllerState& state, const Decision& dec,
                                    const AlgoParams& params) {
  double qy = 0.0;
  for (std::size_t i = 0; i < dec.Y.size(); ++i) qy += state.Q[i] * params.w * dec.Y[i];
  return qy;
}

}  // namespace detail

// Minimizes -v*R_r + J*T_r + Q.(w*Y_r) over rows; exact-equality ties go to
// the smallest index. Rows are validated against the active bounds.
inline Decision select_row(const TaskMatrix& A, const ControllerState& state,
                           const AlgoParams& params, const Bounds& bounds) {
  if (A.empty()) throw std::invalid_argument("select_row: empty task matrix");
  require_within(bounds, A);
  int best = 0;
  double best_obj = detail::row_objective(A, 0, state, params);
  for (int r = 1; r < A.rows(); ++r) {
    const double obj = detail::row_objective(A, r, state, params);
    if (obj < best_obj) {
      best = r;
      best_obj = obj;
    }
  }
  Decision dec;
  dec.row_index = best;
  dec.T = A.duration(best);
  dec.R = A.reward(best);
  auto y = A.penalties(best);
  dec.Y.assign(y.begin(), y.end());
  return dec;
}

// Closed-form minimizer of the gamma quadratic, projected onto
// [gamma_min, gamma_max]:
//   gamma = clamp(gamma_prev + (v*R - J*T - Q.(wY)) / (gamma_prev*alpha*v^2)).
inline double update_gamma(const ControllerState& state, const Decision& dec,
                           const AlgoParams& params, const DerivedConstants& consts) {
  const double qy = detail::queue_penalty_product(state, dec, params);
  const double increment = (params.v * dec.R - state.J * dec.T - qy) /
                           (state.gamma * params.alpha * params.v * params.v);
  return clamp(state.gamma + increment, consts.gamma_min, consts.gamma_max);
}

// Q'_i = clamp(Q_i + w*Y_i, 0, q_i*v); J' = max(0, J + T - 1/gamma_k).
inline std::pair<std::vector<double>, double> update_queues(const ControllerState& state,
                                                            const Decision& dec, double gamma_k,
                                                            const AlgoParams& params) {
  std::vector<double> q_next(state.Q.size());
  for (std::size_t i = 0; i < state.Q.size(); ++i)
    q_next[i] = clamp(state.Q[i] + params.w * dec.Y[i], 0.0, params.q[i] * params.v);
  const double j_next = std::max(0.0, state.J + dec.T - 1.0 / gamma_k);
  return {std::move(q_next), j_next};
}

struct StepResult {
  Decision decision;
  ControllerState state;
  StepDiagnostics diagnostics;
};

// One full task: select_row, then the gamma update, then the queue updates.
// The returned state's gamma is gamma[k]; its counter is k+1. Penalty bounds
// in `bounds` are unweighted; the indicator threshold uses w*y_i_max because
// the queues hold the weighted process.
inline StepResult step(const ControllerState& state, const TaskMatrix& A, const AlgoParams& params,
                       const DerivedConstants& consts, const Bounds& bounds) {
  StepResult out;
  out.decision = select_row(A, state, params, bounds);

  StepDiagnostics& diag = out.diagnostics;
  double q_norm_sq = 0.0;
  for (double qi : state.Q) q_norm_sq += qi * qi;
  diag.Z = std::sqrt(q_norm_sq);
  diag.L_before = 0.5 * state.J * state.J + 0.5 * q_norm_sq;
  diag.indicators.resize(state.Q.size());
  for (std::size_t i = 0; i < state.Q.size(); ++i) {
    diag.indicators[i] =
        state.Q[i] > params.q[i] * params.v - params.w * bounds.y_max[i] ? 1 : 0;
  }

  const double gamma_k = update_gamma(state, out.decision, params, consts);
  const double qy = detail::queue_penalty_product(state, out.decision, params);
  const double linear_coeff = -params.v * out.decision.R + state.J * out.decision.T + qy;
  const double dg = gamma_k - state.gamma;
  diag.gamma_objective_value =
      gamma_k * linear_coeff + 0.5 * state.gamma * params.alpha * params.v * params.v * dg * dg;
  diag.drift_rhs = consts.b + state.J * (out.decision.T - 1.0 / gamma_k) + qy;

  auto [q_next, j_next] = update_queues(state, out.decision, gamma_k, params);
  double q_norm_sq_after = 0.0;
  for (double qi : q_next) q_norm_sq_after += qi * qi;
  diag.Z_after = std::sqrt(q_norm_sq_after);
  diag.L_after = 0.5 * j_next * j_next + 0.5 * q_norm_sq_after;
  diag.delta_L = diag.L_after - diag.L_before;

  out.state.Q = std::move(q_next);
  out.state.J = j_next;
  out.state.gamma = gamma_k;
  out.state.k = state.k + 1;
  return out;
}

}  // namespace renewal
