#pragma once
// Reference policies: ratio-greedy row choice, a stochastic-approximation
// ratio tracker for unconstrained systems, and a drift-plus-penalty variant
// driven by the running reward/time ratio with uncapped queues.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "controller.hpp"
#include "core.hpp"

namespace renewal {

namespace detail {

inline Decision make_decision(const TaskMatrix& A, int r) {
  Decision dec;
  dec.row_index = r;
  dec.T = A.duration(r);
  dec.R = A.reward(r);
  auto y = A.penalties(r);
  dec.Y.assign(y.begin(), y.end());
  return dec;
}

}  // namespace detail

// Picks the row maximizing R_r / T_r among rows passing `filter` (all rows
// when the filter is empty). Exact ties go to the smallest index.
inline Decision greedy_step(const TaskMatrix& A,
                            const std::function<bool(const TaskMatrix&, int)>& filter = {}) {
  if (A.empty()) throw std::invalid_argument("greedy_step: empty task matrix");
  int best = -1;
  double best_ratio = 0.0;
  for (int r = 0; r < A.rows(); ++r) {
    if (filter && !filter(A, r)) continue;
    const double ratio = A.reward(r) / A.duration(r);
    if (best < 0 || ratio > best_ratio) {
      best = r;
      best_ratio = ratio;
    }
  }
  if (best < 0) throw std::invalid_argument("greedy_step: filter rejected every row");
  return detail::make_decision(A, best);
}

struct RmState {
  double theta = 0.0;
  std::int64_t k = 1;
};

// Unconstrained-only ratio tracker: picks argmax R_r - theta*T_r (smallest
// index on exact ties), then theta' = theta + (R - theta*T)/(k+1). The
// iterate is expected to stay in [0, r_max/t_min]; callers flag departures
// rather than clamping.
inline std::pair<Decision, RmState> robbins_monro_step(const RmState& state, const TaskMatrix& A) {
  if (A.empty()) throw std::invalid_argument("robbins_monro_step: empty task matrix");
  if (A.n() != 0)
    throw std::invalid_argument("robbins_monro_step: defined only for systems without penalties");
  int best = 0;
  double best_score = A.reward(0) - state.theta * A.duration(0);
  for (int r = 1; r < A.rows(); ++r) {
    const double score = A.reward(r) - state.theta * A.duration(r);
    if (score > best_score) {
      best = r;
      best_score = score;
    }
  }
  Decision dec = detail::make_decision(A, best);
  RmState next;
  const double eta = 1.0 / static_cast<double>(state.k + 1);
  next.theta = state.theta + eta * (dec.R - state.theta * dec.T);
  next.k = state.k + 1;
  return {std::move(dec), next};
}

struct DppState {
  std::vector<double> Q;  // uncapped, nonnegative
  double cum_R = 0.0;
  double cum_T = 0.0;
  std::int64_t k = 1;
};

inline DppState initial_dpp_state(int n) {
  DppState st;
  st.Q.assign(static_cast<std::size_t>(n), 0.0);
  return st;
}

// Drift-plus-penalty with the running ratio as the price: theta_prev is
// cum_R/cum_T after k-1 tasks (0 for the first), the row minimizes
// -v*(R - theta_prev*T) + Q.Y, and queues update by positive part with no
// cap. theta_prev stays in [0, r_max/t_min] by construction.
inline std::pair<Decision, DppState> dpp_ratio_step(const DppState& state, const TaskMatrix& A,
                                                    double v) {
  if (A.empty()) throw std::invalid_argument("dpp_ratio_step: empty task matrix");
  if (A.n() != static_cast<int>(state.Q.size()))
    throw std::invalid_argument("dpp_ratio_step: queue count does not match penalty count");
  if (!(v > 0.0)) throw std::invalid_argument("dpp_ratio_step: v must be positive");
  const double theta_prev = state.k > 1 ? state.cum_R / state.cum_T : 0.0;
  int best = 0;
  double best_obj = 0.0;
  for (int r = 0; r < A.rows(); ++r) {
    double obj = -v * (A.reward(r) - theta_prev * A.duration(r));
    for (int i = 0; i < A.n(); ++i) obj += state.Q[static_cast<std::size_t>(i)] * A.penalty(r, i);
    if (r == 0 || obj < best_obj) {
      best = r;
      best_obj = obj;
    }
  }
  Decision dec = detail::make_decision(A, best);
  DppState next;
  next.Q.resize(state.Q.size());
  for (std::size_t i = 0; i < state.Q.size(); ++i)
    next.Q[i] = std::max(0.0, state.Q[i] + dec.Y[i]);
  next.cum_R = state.cum_R + dec.R;
  next.cum_T = state.cum_T + dec.T;
  next.k = state.k + 1;
  return {std::move(dec), next};
}

}  // namespace renewal
