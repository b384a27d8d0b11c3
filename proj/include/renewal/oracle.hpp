#pragma once
// Ground-truth quantities for finite-support task distributions: the optimal
// reward rate theta*, the maximizing stationary policy, the Slater margin of
// the penalty constraints, and the distance from a point to the achievable
// expectation set (a product-of-simplices image, handled with away-step
// Frank-Wolfe).

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "scenarios.hpp"
#include "simplex.hpp"

namespace renewal {

struct StationaryPolicy {
  std::vector<std::vector<double>> row_probabilities;  // per atom, sums to 1
};

struct OracleResult {
  bool feasible = false;
  double theta_star = 0.0;
  StationaryPolicy policy;
  double slater_s = 0.0;                  // +infinity when there are no penalties
  std::vector<double> expectation_point;  // (t, r, y_1..y_n) under the policy
};

// h(theta) = sum_a p_a * max_r (R - theta*T): nonincreasing, h(theta*) = 0
// for the unconstrained problem.
inline double unconstrained_h(const FiniteSupportSpec& spec, double theta) {
  double h = 0.0;
  for (const auto& atom : spec.atoms) {
    double best = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < atom.matrix.rows(); ++r)
      best = std::max(best, atom.matrix.reward(r) - theta * atom.matrix.duration(r));
    h += atom.probability * best;
  }
  return h;
}

namespace detail {

struct PolicyLp {
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> a_ub;  // one row per penalty dimension
  std::vector<double> b_ub;
  int total_rows = 0;

  explicit PolicyLp(const FiniteSupportSpec& spec) {
    const int n = spec.n();
    for (const auto& atom : spec.atoms) total_rows += atom.matrix.rows();
    a_eq.assign(spec.atoms.size(), std::vector<double>(static_cast<std::size_t>(total_rows), 0.0));
    b_eq.resize(spec.atoms.size());
    a_ub.assign(static_cast<std::size_t>(n),
                std::vector<double>(static_cast<std::size_t>(total_rows), 0.0));
    b_ub.assign(static_cast<std::size_t>(n), 0.0);
    int idx = 0;
    for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
      const auto& atom = spec.atoms[a];
      b_eq[a] = atom.probability;
      for (int r = 0; r < atom.matrix.rows(); ++r, ++idx) {
        a_eq[a][static_cast<std::size_t>(idx)] = 1.0;
        for (int i = 0; i < n; ++i)
          a_ub[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx)] =
              atom.matrix.penalty(r, i);
      }
    }
  }

  std::vector<double> ratio_objective(const FiniteSupportSpec& spec, double theta) const {
    std::vector<double> c(static_cast<std::size_t>(total_rows), 0.0);
    int idx = 0;
    for (const auto& atom : spec.atoms)
      for (int r = 0; r < atom.matrix.rows(); ++r, ++idx)
        c[static_cast<std::size_t>(idx)] =
            atom.matrix.reward(r) - theta * atom.matrix.duration(r);
    return c;
  }
};

inline OracleResult result_from_occupation(const FiniteSupportSpec& spec,
                                           const std::vector<double>& x) {
  const int n = spec.n();
  OracleResult out;
  out.feasible = true;
  out.expectation_point.assign(static_cast<std::size_t>(2 + n), 0.0);
  out.policy.row_probabilities.resize(spec.atoms.size());
  int idx = 0;
  for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
    const auto& atom = spec.atoms[a];
    auto& probs = out.policy.row_probabilities[a];
    probs.assign(static_cast<std::size_t>(atom.matrix.rows()), 0.0);
    double mass = 0.0;
    for (int r = 0; r < atom.matrix.rows(); ++r, ++idx) {
      const double xi = std::max(0.0, x[static_cast<std::size_t>(idx)]);
      probs[static_cast<std::size_t>(r)] = xi;
      mass += xi;
      out.expectation_point[0] += xi * atom.matrix.duration(r);
      out.expectation_point[1] += xi * atom.matrix.reward(r);
      for (int i = 0; i < n; ++i)
        out.expectation_point[static_cast<std::size_t>(2 + i)] += xi * atom.matrix.penalty(r, i);
    }
    if (mass > 0.0)
      for (auto& p : probs) p /= mass;
  }
  out.theta_star = out.expectation_point[1] / out.expectation_point[0];
  return out;
}

}  // namespace detail

// Largest achievable slack: max s such that some stationary policy satisfies
// E[Y_i] + s <= 0 for every penalty dimension. +infinity when n = 0;
// negative when the constraints are infeasible.
inline double slater_margin(const FiniteSupportSpec& spec) {
  spec.validate();
  if (spec.n() == 0) return std::numeric_limits<double>::infinity();
  detail::PolicyLp lp(spec);
  // Variables: occupation measure x, then s = sp - sn.
  const int nx = lp.total_rows;
  std::vector<double> c(static_cast<std::size_t>(nx + 2), 0.0);
  c[static_cast<std::size_t>(nx)] = 1.0;
  c[static_cast<std::size_t>(nx + 1)] = -1.0;
  auto a_eq = lp.a_eq;
  for (auto& row : a_eq) row.resize(static_cast<std::size_t>(nx + 2), 0.0);
  auto a_ub = lp.a_ub;
  for (auto& row : a_ub) {
    row.resize(static_cast<std::size_t>(nx + 2), 0.0);
    row[static_cast<std::size_t>(nx)] = 1.0;
    row[static_cast<std::size_t>(nx + 1)] = -1.0;
  }
  const LpResult res = solve_lp(c, a_eq, lp.b_eq, a_ub, lp.b_ub);
  if (res.status != LpStatus::Optimal)
    throw std::logic_error("slater_margin: margin program failed to solve");
  return res.value;
}

// Optimal reward rate without penalty constraints, via bisection on
// h(theta) >= 0 to within 1e-10, reported as the exact ratio of the
// maximizing deterministic per-atom policy.
inline OracleResult theta_star_unconstrained(const FiniteSupportSpec& spec) {
  spec.validate();
  const Bounds bounds = bounds_of(spec);
  double lo = 0.0, hi = bounds.r_max / bounds.t_min;
  if (unconstrained_h(spec, hi) >= 0.0) {
    lo = hi;
  } else {
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (unconstrained_h(spec, mid) >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }

  const int n = spec.n();
  OracleResult out;
  out.feasible = true;
  out.slater_s = std::numeric_limits<double>::infinity();
  out.expectation_point.assign(static_cast<std::size_t>(2 + n), 0.0);
  out.policy.row_probabilities.resize(spec.atoms.size());
  for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
    const auto& atom = spec.atoms[a];
    int best = 0;
    double best_score = atom.matrix.reward(0) - lo * atom.matrix.duration(0);
    for (int r = 1; r < atom.matrix.rows(); ++r) {
      const double score = atom.matrix.reward(r) - lo * atom.matrix.duration(r);
      if (score > best_score) {
        best = r;
        best_score = score;
      }
    }
    auto& probs = out.policy.row_probabilities[a];
    probs.assign(static_cast<std::size_t>(atom.matrix.rows()), 0.0);
    probs[static_cast<std::size_t>(best)] = 1.0;
    out.expectation_point[0] += atom.probability * atom.matrix.duration(best);
    out.expectation_point[1] += atom.probability * atom.matrix.reward(best);
    for (int i = 0; i < n; ++i)
      out.expectation_point[static_cast<std::size_t>(2 + i)] +=
          atom.probability * atom.matrix.penalty(best, i);
  }
  out.theta_star = out.expectation_point[1] / out.expectation_point[0];
  return out;
}

// g(theta) = max E[R - theta*T] over stationary policies meeting E[Y_i] <= 0,
// used by theta_star_constrained; nonincreasing in theta.
inline double constrained_g(const FiniteSupportSpec& spec, double theta) {
  detail::PolicyLp lp(spec);
  const LpResult res = solve_lp(lp.ratio_objective(spec, theta), lp.a_eq, lp.b_eq, lp.a_ub, lp.b_ub);
  if (res.status != LpStatus::Optimal)
    throw std::invalid_argument("constrained_g: penalty constraints are infeasible");
  return res.value;
}

// Optimal reward rate subject to E[Y_i] <= 0, via bisection with an inner
// policy program at each trial theta. The reported theta* is the exact ratio
// of the final occupation measure, so the returned policy attains it.
inline OracleResult theta_star_constrained(const FiniteSupportSpec& spec) {
  spec.validate();
  if (spec.n() == 0) return theta_star_unconstrained(spec);

  detail::PolicyLp lp(spec);
  {
    // Slater-free feasibility check before any ratio search.
    std::vector<double> zero(static_cast<std::size_t>(lp.total_rows), 0.0);
    const LpResult feas = solve_lp(zero, lp.a_eq, lp.b_eq, lp.a_ub, lp.b_ub);
    if (feas.status != LpStatus::Optimal) {
      OracleResult out;
      out.feasible = false;
      out.slater_s = slater_margin(spec);
      return out;
    }
  }

  const Bounds bounds = bounds_of(spec);
  auto g = [&](double theta) {
    const LpResult res =
        solve_lp(lp.ratio_objective(spec, theta), lp.a_eq, lp.b_eq, lp.a_ub, lp.b_ub);
    if (res.status != LpStatus::Optimal)
      throw std::logic_error("theta_star_constrained: inner program failed");
    return res;
  };

  double lo = 0.0, hi = bounds.r_max / bounds.t_min;
  if (g(hi).value >= 0.0) {
    lo = hi;
  } else {
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (g(mid).value >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }
  OracleResult out = detail::result_from_occupation(spec, g(lo).x);
  out.slater_s = slater_margin(spec);
  return out;
}

struct FwOptions {
  double tolerance = 1e-8;  // on the reported distance
  int max_iterations = 10000;
};

// Euclidean distance from `point` (t, r, y_1..y_n) to the achievable
// expectation set. Away-step Frank-Wolfe over the product of per-atom
// simplices; converges linearly, so membership resolves to ~tolerance^2 in
// the squared objective.
inline double distance_to_gamma(std::span<const double> point, const FiniteSupportSpec& spec,
                                const FwOptions& opt = {}) {
  spec.validate();
  if (!(opt.tolerance > 0.0) || opt.max_iterations < 1)
    throw std::invalid_argument("distance_to_gamma: bad options");
  const int n = spec.n();
  const std::size_t dim = static_cast<std::size_t>(2 + n);
  if (point.size() != dim)
    throw std::invalid_argument("distance_to_gamma: point dimension mismatch");

  // Probability-scaled row vectors; a polytope vertex picks one row per atom.
  const std::size_t na = spec.atoms.size();
  std::vector<std::vector<std::vector<double>>> w(na);
  for (std::size_t a = 0; a < na; ++a) {
    const auto& atom = spec.atoms[a];
    w[a].resize(static_cast<std::size_t>(atom.matrix.rows()));
    for (int r = 0; r < atom.matrix.rows(); ++r) {
      auto& v = w[a][static_cast<std::size_t>(r)];
      v.resize(dim);
      v[0] = atom.probability * atom.matrix.duration(r);
      v[1] = atom.probability * atom.matrix.reward(r);
      for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(2 + i)] = atom.probability * atom.matrix.penalty(r, i);
    }
  }
  const auto vertex_point = [&](const std::vector<int>& pick) {
    std::vector<double> z(dim, 0.0);
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t j = 0; j < dim; ++j) z[j] += w[a][static_cast<std::size_t>(pick[a])][j];
    return z;
  };
  const auto dot = [dim](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += u[j] * v[j];
    return s;
  };

  std::map<std::vector<int>, double> active;
  active[std::vector<int>(na, 0)] = 1.0;

  const double gap_tol = opt.tolerance * opt.tolerance;
  double f = 0.0;
  double prev_f = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::vector<double> z(dim, 0.0);
    for (const auto& [pick, weight] : active) {
      const auto zp = vertex_point(pick);
      for (std::size_t j = 0; j < dim; ++j) z[j] += weight * zp[j];
    }
    std::vector<double> grad(dim);
    f = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      grad[j] = 2.0 * (z[j] - point[j]);
      f += (z[j] - point[j]) * (z[j] - point[j]);
    }

    // Frank-Wolfe vertex: per-atom best row against the gradient.
    std::vector<int> fw_pick(na, 0);
    for (std::size_t a = 0; a < na; ++a) {
      double best = dot(grad, w[a][0]);
      for (std::size_t r = 1; r < w[a].size(); ++r) {
        const double s = dot(grad, w[a][r]);
        if (s < best) {
          best = s;
          fw_pick[a] = static_cast<int>(r);
        }
      }
    }
    const auto z_fw = vertex_point(fw_pick);
    const double gap_fw = dot(grad, z) - dot(grad, z_fw);
    if (gap_fw <= gap_tol) break;
    if (f >= prev_f - 1e-18 * (1.0 + f)) {
      if (++stagnant > 50) break;
    } else {
      stagnant = 0;
    }
    prev_f = f;

    // Away vertex: worst active pick against the gradient.
    const std::vector<int>* away_pick = nullptr;
    double away_weight = 0.0, gap_away = -std::numeric_limits<double>::infinity();
    for (const auto& [pick, weight] : active) {
      const double s = dot(grad, vertex_point(pick));
      if (s - dot(grad, z) > gap_away) {
        gap_away = s - dot(grad, z);
        away_pick = &pick;
        away_weight = weight;
      }
    }

    std::vector<double> dir(dim);
    double gamma_max = 1.0;
    bool is_away = false;
    if (active.size() > 1 && away_pick && gap_away > gap_fw) {
      const auto z_a = vertex_point(*away_pick);
      for (std::size_t j = 0; j < dim; ++j) dir[j] = z[j] - z_a[j];
      gamma_max = away_weight / (1.0 - away_weight);
      is_away = true;
    } else {
      for (std::size_t j = 0; j < dim; ++j) dir[j] = z_fw[j] - z[j];
    }
    double dd = dot(dir, dir);
    if (dd <= 0.0) break;
    double resid_dot = 0.0;
    for (std::size_t j = 0; j < dim; ++j) resid_dot += (z[j] - point[j]) * dir[j];
    const double gamma = clamp(-resid_dot / dd, 0.0, gamma_max);
    if (gamma <= 0.0) break;

    if (is_away) {
      for (auto& [pick, weight] : active) weight *= 1.0 + gamma;
      auto it = active.find(*away_pick);
      it->second -= gamma;
    } else {
      for (auto& [pick, weight] : active) weight *= 1.0 - gamma;
      active[fw_pick] += gamma;
    }
    double total = 0.0;
    for (auto it = active.begin(); it != active.end();) {
      if (it->second <= 1e-15)
        it = active.erase(it);
      else
        total += (it++)->second;
    }
    if (total > 0.0)
      for (auto& [pick, weight] : active) weight /= total;
  }
  {
    std::vector<double> z(dim, 0.0);
    for (const auto& [pick, weight] : active) {
      const auto zp = vertex_point(pick);
      for (std::size_t j = 0; j < dim; ++j) z[j] += weight * zp[j];
    }
    f = 0.0;
    for (std::size_t j = 0; j < dim; ++j) f += (z[j] - point[j]) * (z[j] - point[j]);
  }
  return std::sqrt(std::max(0.0, f));
}

}  // namespace renewal
