#pragma once
// Domain types for per-task renewal optimization: task matrices, boundedness
// data, algorithm parameters, and the derived constants behind the
// controller's deterministic and statistical guarantees.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace renewal {

// Thrown when a run breaks a guarantee that holds by construction
// (queue caps, gamma range, J bound, drift bound). CLI maps it to exit 2.
struct invariant_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Projection of z onto [lo, hi].
inline double clamp(double z, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return z < lo ? lo : (z > hi ? hi : z);
}

struct TaskRow {
  double duration = 0.0;
  double reward = 0.0;
  std::vector<double> penalties;
};

// Per-task option set. Row-major flat storage, stride 2+n per row:
// duration, reward, penalties[0..n).
class TaskMatrix {
 public:
  TaskMatrix() = default;
  explicit TaskMatrix(int n) : n_(n) {
    if (n < 0) throw std::invalid_argument("TaskMatrix: negative penalty dimension");
  }

  int n() const { return n_; }
  int rows() const { return static_cast<int>(data_.size() / stride()); }
  bool empty() const { return data_.empty(); }

  double duration(int r) const { return data_[offset(r)]; }
  double reward(int r) const { return data_[offset(r) + 1]; }
  double penalty(int r, int i) const { return data_[offset(r) + 2 + static_cast<std::size_t>(i)]; }
  std::span<const double> penalties(int r) const {
    return std::span<const double>(data_.data() + offset(r) + 2, static_cast<std::size_t>(n_));
  }

  void append_row(double duration, double reward, std::span<const double> penalties) {
    if (static_cast<int>(penalties.size()) != n_)
      throw std::invalid_argument("TaskMatrix: penalty dimension mismatch");
    data_.push_back(duration);
    data_.push_back(reward);
    data_.insert(data_.end(), penalties.begin(), penalties.end());
  }
  void append_row(double duration, double reward, std::initializer_list<double> penalties) {
    append_row(duration, reward, std::span<const double>(penalties.begin(), penalties.size()));
  }
  void append_row(const TaskRow& row) {
    append_row(row.duration, row.reward,
               std::span<const double>(row.penalties.data(), row.penalties.size()));
  }

  TaskRow row(int r) const {
    TaskRow out;
    out.duration = duration(r);
    out.reward = reward(r);
    auto y = penalties(r);
    out.penalties.assign(y.begin(), y.end());
    return out;
  }

 private:
  std::size_t stride() const { return static_cast<std::size_t>(2 + n_); }
  std::size_t offset(int r) const { return static_cast<std::size_t>(r) * stride(); }

  int n_ = 0;
  std::vector<double> data_;
};

// Sure bounds on every emitted row: t_min <= T <= t_max, 0 <= R <= r_max,
// -y_min[i] <= Y_i <= y_max[i], ||Y||_2 <= c.
struct Bounds {
  double t_min = 1.0;
  double t_max = 1.0;
  double r_max = 0.0;
  double c = 0.0;
  std::vector<double> y_min;
  std::vector<double> y_max;

  int n() const { return static_cast<int>(y_min.size()); }

  void validate() const {
    if (!(t_min > 0.0)) throw std::invalid_argument("Bounds: t_min must be positive");
    if (!(t_min <= t_max)) throw std::invalid_argument("Bounds: t_min > t_max");
    if (!(r_max >= 0.0)) throw std::invalid_argument("Bounds: r_max must be nonnegative");
    if (!(c >= 0.0)) throw std::invalid_argument("Bounds: c must be nonnegative");
    if (y_min.size() != y_max.size())
      throw std::invalid_argument("Bounds: y_min/y_max size mismatch");
    for (std::size_t i = 0; i < y_min.size(); ++i) {
      if (!(y_min[i] >= 0.0) || !(y_max[i] >= 0.0))
        throw std::invalid_argument("Bounds: penalty bounds must be nonnegative");
    }
  }
};

inline bool row_within(const Bounds& b, double duration, double reward,
                       std::span<const double> penalties, double tol = 0.0) {
  if (duration < b.t_min - tol || duration > b.t_max + tol) return false;
  if (reward < -tol || reward > b.r_max + tol) return false;
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < penalties.size(); ++i) {
    if (penalties[i] < -b.y_min[i] - tol || penalties[i] > b.y_max[i] + tol) return false;
    norm_sq += penalties[i] * penalties[i];
  }
  return std::sqrt(norm_sq) <= b.c + tol;
}

inline void require_within(const Bounds& b, const TaskMatrix& A, double tol = 1e-9) {
  if (A.empty()) throw std::invalid_argument("TaskMatrix: empty matrix");
  if (A.n() != b.n()) throw std::invalid_argument("TaskMatrix: penalty dimension mismatch with Bounds");
  for (int r = 0; r < A.rows(); ++r) {
    if (!row_within(b, A.duration(r), A.reward(r), A.penalties(r), tol))
      throw std::invalid_argument("TaskMatrix: row " + std::to_string(r + 1) +
                                  " violates bounds");
  }
}

// Controller parameters: v (inverse stepsize), alpha (gamma-update curvature),
// q (queue cap multipliers, one per penalty), w (penalty weight; w=1 is the
// unweighted algorithm).
struct AlgoParams {
  double v = 1.0;
  double alpha = 1.0;
  std::vector<double> q;
  double w = 1.0;

  void validate() const {
    if (!(v > 0.0)) throw std::invalid_argument("AlgoParams: v must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("AlgoParams: alpha must be positive");
    if (!(w > 0.0)) throw std::invalid_argument("AlgoParams: w must be positive");
    for (double qi : q)
      if (!(qi >= 0.0)) throw std::invalid_argument("AlgoParams: q entries must be nonnegative");
  }
};

// Rescales the penalty bounds for the weighted process Y' = w*Y. All derived
// constants and the indicator threshold refer to the weighted process, since
// that is what the controller actually queues.
inline Bounds effective_penalty_bounds(const Bounds& b, double w) {
  Bounds out = b;
  out.c = w * b.c;
  for (auto& v : out.y_min) v *= w;
  for (auto& v : out.y_max) v *= w;
  return out;
}

struct DerivedConstants {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  double b = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double d0 = 0.0;
  std::optional<double> lambda;
  std::optional<double> eta;
  std::optional<double> rho;
  std::optional<double> d;
  std::optional<double> theta_star_hint;
};

/// Fine-tuned curvature: alpha = c1 / max(c2, 1/2).
inline double tune_alpha(const Bounds& bounds) {
  bounds.validate();
  const double dt = bounds.t_max - bounds.t_min;
  const double c1 = bounds.r_max + dt * (1.0 + bounds.r_max) / bounds.t_min;
  const double c2 =
      (dt / bounds.t_min) * (bounds.t_max / bounds.t_min + bounds.t_min / bounds.t_max - 2.0);
  return c1 / std::max(c2, 0.5);
}

// Computes every constant from its defining equation, in source order:
// gamma range, drift constant b, queue-bound constants beta1/beta2, reward
// bound constants d1/d2, tuning constants c1/c2, then the queue-concentration
// constants d0 and (when a finite Slater margin s>0 is supplied) lambda, eta,
// rho, d. theta_star, when known, makes d2 exact; otherwise d2 is evaluated at
// the conservative upper bound r_max/t_min, which keeps the reward bound
// valid. Penalty bounds are first rescaled by w (weighted process Y' = w*Y).
inline DerivedConstants derive_constants(const Bounds& bounds_in, const AlgoParams& params,
                                         std::optional<double> slater_s = std::nullopt,
                                         std::optional<double> theta_star = std::nullopt) {
  bounds_in.validate();
  params.validate();
  if (static_cast<int>(params.q.size()) != bounds_in.n())
    throw std::invalid_argument("derive_constants: q dimension mismatch with Bounds");
  if (slater_s && !(*slater_s > 0.0))
    throw std::invalid_argument("derive_constants: slater_s must be positive");

  const Bounds bounds = effective_penalty_bounds(bounds_in, params.w);
  const double dt = bounds.t_max - bounds.t_min;
  const double v = params.v;
  const double alpha = params.alpha;

  DerivedConstants out;
  out.gamma_min = 1.0 / bounds.t_max;
  out.gamma_max = 1.0 / bounds.t_min;
  out.b = 0.5 * (bounds.c * bounds.c + dt * dt);

  double qy = 0.0, q_norm_sq = 0.0;
  for (std::size_t i = 0; i < params.q.size(); ++i) {
    qy += params.q[i] * bounds.y_min[i];
    q_norm_sq += params.q[i] * params.q[i];
  }
  const double q_norm = std::sqrt(q_norm_sq);
  out.beta1 = (1.0 + bounds.r_max + qy) / bounds.t_min;
  out.beta2 =
      (1.0 / v) * std::ceil(alpha * v * out.gamma_max * (out.gamma_max - out.gamma_min)) * dt;

  const double beta_sum = out.beta1 + out.beta2;
  const double sq = bounds.r_max + bounds.c * q_norm + dt * beta_sum;
  out.d1 = (out.b + sq * sq / (2.0 * out.gamma_min * out.gamma_min * alpha)) / bounds.t_min;
  const double theta = theta_star ? *theta_star : bounds.r_max / bounds.t_min;
  out.theta_star_hint = theta_star;
  out.d2 = (0.5 * q_norm_sq + 0.5 * beta_sum * beta_sum +
            0.5 * alpha * (out.gamma_max - out.gamma_min) * (out.gamma_max - out.gamma_min) +
            theta * beta_sum) /
           bounds.t_min;

  out.c1 = bounds.r_max + dt * (1.0 + bounds.r_max) / bounds.t_min;
  out.c2 = (dt / bounds.t_min) * (bounds.t_max / bounds.t_min + bounds.t_min / bounds.t_max - 2.0);

  out.d0 = 2.0 * bounds.r_max + 2.0 * beta_sum * dt + bounds.c * bounds.c / v;

  if (slater_s && std::isfinite(*slater_s)) {
    const double s = *slater_s;
    if (!(bounds.c > 0.0))
      throw std::invalid_argument("derive_constants: Slater margin requires penalty constraints");
    if (s > bounds.c * (1.0 + 1e-12))
      throw std::invalid_argument("derive_constants: slater_s exceeds the penalty norm bound c");
    out.lambda = std::max(v * out.d0 / s - 0.25 * s, 0.5 * s);
    out.eta = (0.5 * s) / (bounds.c * bounds.c + bounds.c * s / 6.0);
    out.rho = 1.0 - *out.eta * s / 4.0;
    out.d = (std::exp(*out.eta * bounds.c) - *out.rho) * std::exp(*out.eta * *out.lambda) /
            (1.0 - *out.rho);
  }
  return out;
}

}  // namespace renewal
