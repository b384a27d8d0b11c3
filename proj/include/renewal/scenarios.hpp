#pragma once
// Task-matrix generators: the two benchmark systems (each with two
// distributions), raw-column penalty transforms, distribution-change
// schedules, and finite-support instances for the exact oracle.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace renewal {

// A row before penalty transformation: physical columns instead of
// constraint-residual penalties.
struct RawRow {
  double duration = 0.0;
  double reward = 0.0;
  double energy = 0.0;
  std::optional<double> quality;
};

// Builds constraint residuals from physical columns. With q_av given the
// penalty vector is (q_av - Quality, Energy - p_av*T); otherwise it is the
// single residual Energy - p_av*T. Time averages <= 0 then encode
// "average power <= p_av" and "average quality >= q_av".
inline TaskMatrix penalty_transform(const std::vector<RawRow>& raw, double p_av,
                                    std::optional<double> q_av = std::nullopt) {
  const int n = q_av ? 2 : 1;
  TaskMatrix out(n);
  for (const RawRow& row : raw) {
    const double y_energy = row.energy - p_av * row.duration;
    if (q_av) {
      if (!row.quality) throw std::invalid_argument("penalty_transform: missing quality column");
      out.append_row(row.duration, row.reward, {*q_av - *row.quality, y_energy});
    } else {
      out.append_row(row.duration, row.reward, {y_energy});
    }
  }
  return out;
}

// Preprocessing for systems whose native rewards can be negative: adds
// (r_min/t_min)*T to every reward, where r_min bounds the magnitude of the
// most negative reward. Never applied implicitly.
inline TaskMatrix shift_rewards(const TaskMatrix& A, double r_min, double t_min) {
  if (!(t_min > 0.0)) throw std::invalid_argument("shift_rewards: t_min must be positive");
  TaskMatrix out(A.n());
  for (int r = 0; r < A.rows(); ++r) {
    TaskRow row = A.row(r);
    row.reward += (r_min / t_min) * row.duration;
    out.append_row(row);
  }
  return out;
}

// System 1 (no penalties): M rows where row 1 is always the unit-duration
// zero-reward vacation. Distribution 1: M ~ (0.1, 0.6, 0.15, 0.15) on
// {1,2,3,4}; other rows T~Unif[1,10], R = T*G with G~Unif[0,50].
// Distribution 2: M ~ (0, 0.2, 0.4, 0.4); other rows T~Unif[1,10],
// R = G*T + H with G~Unif[10,30], H~Unif[0,200].
template <typename Rng>
TaskMatrix sample_system1(int dist_id, Rng& rng) {
  if (dist_id != 1 && dist_id != 2)
    throw std::invalid_argument("sample_system1: distribution id must be 1 or 2");
  static constexpr double kCum1[4] = {0.1, 0.7, 0.85, 1.0};
  static constexpr double kCum2[4] = {0.0, 0.2, 0.6, 1.0};
  const double* cum = dist_id == 1 ? kCum1 : kCum2;
  const double u = rng.next_unit();
  int m = 4;
  for (int j = 0; j < 4; ++j) {
    if (u < cum[j]) {
      m = j + 1;
      break;
    }
  }
  TaskMatrix out(0);
  out.append_row(1.0, 0.0, {});
  for (int r = 2; r <= m; ++r) {
    const double t = rng.next_uniform(1.0, 10.0);
    if (dist_id == 1) {
      const double g = rng.next_uniform(0.0, 50.0);
      out.append_row(t, t * g, {});
    } else {
      const double g = rng.next_uniform(10.0, 30.0);
      const double h = rng.next_uniform(0.0, 200.0);
      out.append_row(t, g * t + h, {});
    }
  }
  return out;
}

// System 2 (one power constraint): three rows per task. Row 1 idles for one
// unit at zero energy; rows 2 and 3 are driven by U1,U2~Unif[0,1]:
//   Distribution 1: (T2,R2,E2) = (1+9U1, 10U1(U2+1), 1+9U1),
//                   (T3,R3,E3) = (6+6U1, 10U1(U2+1), U1).
//   Distribution 2: same except R2 = min(20(U2+1), 20).
// Penalties are the residuals Energy - p_av*T.
template <typename Rng>
TaskMatrix sample_system2(int dist_id, Rng& rng, double p_av = 1.0 / 3.0) {
  if (dist_id != 1 && dist_id != 2)
    throw std::invalid_argument("sample_system2: distribution id must be 1 or 2");
  const double u1 = rng.next_unit();
  const double u2 = rng.next_unit();
  std::vector<RawRow> raw(3);
  raw[0] = {1.0, 0.0, 0.0, std::nullopt};
  const double shared_reward = 10.0 * u1 * (u2 + 1.0);
  raw[1].duration = 1.0 + 9.0 * u1;
  raw[1].reward = dist_id == 1 ? shared_reward : std::min(20.0 * (u2 + 1.0), 20.0);
  raw[1].energy = 1.0 + 9.0 * u1;
  raw[2].duration = 6.0 + 6.0 * u1;
  raw[2].reward = shared_reward;
  raw[2].energy = u1;
  return penalty_transform(raw, p_av);
}

// Finite-support distribution over task matrices; the oracle solves the
// deterministic problem exactly on these.
struct FiniteSupportSpec {
  struct Atom {
    double probability = 0.0;
    TaskMatrix matrix;
  };
  std::vector<Atom> atoms;

  int n() const { return atoms.empty() ? 0 : atoms.front().matrix.n(); }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("FiniteSupportSpec: no atoms");
    double total = 0.0;
    for (const Atom& a : atoms) {
      if (!(a.probability > 0.0))
        throw std::invalid_argument("FiniteSupportSpec: probabilities must be positive");
      if (a.matrix.empty()) throw std::invalid_argument("FiniteSupportSpec: empty atom matrix");
      if (a.matrix.n() != n())
        throw std::invalid_argument("FiniteSupportSpec: penalty dimension mismatch across atoms");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("FiniteSupportSpec: probabilities must sum to 1");
  }
};

template <typename Rng>
const TaskMatrix& sample_finite_support(const FiniteSupportSpec& spec, Rng& rng) {
  const double u = rng.next_unit();
  double cum = 0.0;
  for (const auto& atom : spec.atoms) {
    cum += atom.probability;
    if (u < cum) return atom.matrix;
  }
  return spec.atoms.back().matrix;
}

// Tight bounds box of a finite-support spec (used as the active Bounds).
inline Bounds bounds_of(const FiniteSupportSpec& spec) {
  spec.validate();
  const int n = spec.n();
  Bounds b;
  b.t_min = std::numeric_limits<double>::infinity();
  b.t_max = 0.0;
  b.r_max = 0.0;
  b.c = 0.0;
  b.y_min.assign(n, 0.0);
  b.y_max.assign(n, 0.0);
  for (const auto& atom : spec.atoms) {
    for (int r = 0; r < atom.matrix.rows(); ++r) {
      b.t_min = std::min(b.t_min, atom.matrix.duration(r));
      b.t_max = std::max(b.t_max, atom.matrix.duration(r));
      b.r_max = std::max(b.r_max, atom.matrix.reward(r));
      double norm_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double y = atom.matrix.penalty(r, i);
        b.y_min[i] = std::max(b.y_min[i], -y);
        b.y_max[i] = std::max(b.y_max[i], y);
        norm_sq += y * y;
      }
      b.c = std::max(b.c, std::sqrt(norm_sq));
    }
  }
  b.validate();
  return b;
}

// Piecewise-constant distribution schedule: (start_task, distribution_id)
// change points, first entry at task 1, strictly increasing.
struct SchedulePoint {
  std::int64_t start_task = 1;
  int distribution_id = 1;
};

inline int distribution_at(std::span<const SchedulePoint> schedule, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("distribution_at: task index must be >= 1");
  if (schedule.empty() || schedule.front().start_task != 1)
    throw std::invalid_argument("distribution_at: schedule must start at task 1");
  int id = schedule.front().distribution_id;
  for (const SchedulePoint& p : schedule) {
    if (p.start_task <= k) id = p.distribution_id;
  }
  return id;
}

enum class SystemKind { System1, System2, FiniteSupport };

struct ScenarioSpec {
  SystemKind system = SystemKind::System1;
  std::vector<SchedulePoint> schedule = {{1, 1}};
  double p_av = 1.0 / 3.0;  // System 2 only
  FiniteSupportSpec finite;  // FiniteSupport only
  std::uint64_t seed = 0;

  bool has_energy() const { return system == SystemKind::System2; }

  void validate() const {
    if (schedule.empty() || schedule.front().start_task != 1)
      throw std::invalid_argument("ScenarioSpec: schedule must start at task 1");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      if (schedule[i].start_task <= schedule[i - 1].start_task)
        throw std::invalid_argument("ScenarioSpec: schedule change points must increase");
    }
    switch (system) {
      case SystemKind::System1:
      case SystemKind::System2:
        for (const SchedulePoint& p : schedule) {
          if (p.distribution_id != 1 && p.distribution_id != 2)
            throw std::invalid_argument("ScenarioSpec: distribution id must be 1 or 2");
        }
        if (system == SystemKind::System2 && (!(p_av > 0.0) || !(p_av < 1.0)))
          throw std::invalid_argument("ScenarioSpec: p_av must lie in (0,1)");
        break;
      case SystemKind::FiniteSupport:
        finite.validate();
        if (schedule.size() != 1)
          throw std::invalid_argument("ScenarioSpec: finite-support scenarios use one distribution");
        break;
    }
  }
};

// Exact analytic bounds for the generators. System 2 penalties are affine in
// U1 (U2 only scales rewards), so endpoint evaluation at U1 in {0,1} is exact.
inline Bounds scenario_bounds(const ScenarioSpec& spec) {
  switch (spec.system) {
    case SystemKind::System1:
      return Bounds{1.0, 10.0, 500.0, 0.0, {}, {}};
    case SystemKind::System2: {
      const double p = spec.p_av;
      double lo = -p, hi = -p;  // idle row
      for (double u1 : {0.0, 1.0}) {
        const double y2 = (1.0 + 9.0 * u1) * (1.0 - p);
        const double y3 = u1 - p * (6.0 + 6.0 * u1);
        lo = std::min({lo, y2, y3});
        hi = std::max({hi, y2, y3});
      }
      Bounds b;
      b.t_min = 1.0;
      b.t_max = 12.0;
      b.r_max = 20.0;
      b.y_min = {std::max(0.0, -lo)};
      b.y_max = {std::max(0.0, hi)};
      b.c = std::max(b.y_min[0], b.y_max[0]);
      return b;
    }
    case SystemKind::FiniteSupport:
      return bounds_of(spec.finite);
  }
  throw std::logic_error("scenario_bounds: unknown system");
}

// Draws the task matrix for (replication, task k) from the scheduled
// distribution. Pure in (spec, indices); thread-safe.
inline TaskMatrix sample_task(const ScenarioSpec& spec, std::uint64_t replication,
                              std::int64_t k) {
  TaskRng rng(spec.seed, replication, static_cast<std::uint64_t>(k));
  const int dist = distribution_at(std::span<const SchedulePoint>(spec.schedule), k);
  switch (spec.system) {
    case SystemKind::System1:
      return sample_system1(dist, rng);
    case SystemKind::System2:
      return sample_system2(dist, rng, spec.p_av);
    case SystemKind::FiniteSupport:
      return sample_finite_support(spec.finite, rng);
  }
  throw std::logic_error("sample_task: unknown system");
}

}  // namespace renewal
