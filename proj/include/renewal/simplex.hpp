#pragma once
// Dense two-phase primal simplex for the small linear programs behind the
// stationary-policy oracles:
//   maximize c.x  subject to  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0.
// Entering column by steepest reduced cost, falling back to Bland's rule
// after a stall so degenerate problems cannot cycle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace renewal {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

namespace detail {

class Simplex {
 public:
  Simplex(const std::vector<double>& c, const std::vector<std::vector<double>>& a_eq,
          const std::vector<double>& b_eq, const std::vector<std::vector<double>>& a_ub,
          const std::vector<double>& b_ub)
      : c_(c), n_(static_cast<int>(c.size())) {
    if (a_eq.size() != b_eq.size() || a_ub.size() != b_ub.size())
      throw std::invalid_argument("simplex: right-hand side size mismatch");
    const int m_ub = static_cast<int>(a_ub.size());
    const int m_eq = static_cast<int>(a_eq.size());
    m_ = m_ub + m_eq;
    slack_ = m_ub;
    cols_ = n_ + slack_;
    rows_.assign(static_cast<std::size_t>(m_), {});
    rhs_.assign(static_cast<std::size_t>(m_), 0.0);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    for (int i = 0; i < m_ub; ++i) init_row(i, a_ub[static_cast<std::size_t>(i)],
                                            b_ub[static_cast<std::size_t>(i)], n_ + i);
    for (int i = 0; i < m_eq; ++i)
      init_row(m_ub + i, a_eq[static_cast<std::size_t>(i)], b_eq[static_cast<std::size_t>(i)], -1);
  }

  LpResult solve() {
    // Make every right-hand side nonnegative, then seed the basis with +1
    // slacks where possible and artificials elsewhere.
    for (int i = 0; i < m_; ++i) {
      if (rhs_[static_cast<std::size_t>(i)] < 0.0) {
        for (auto& v : rows_[static_cast<std::size_t>(i)]) v = -v;
        rhs_[static_cast<std::size_t>(i)] = -rhs_[static_cast<std::size_t>(i)];
      }
    }
    std::vector<int> needs_artificial;
    for (int i = 0; i < m_; ++i) {
      if (i < slack_ && rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(n_ + i)] > 0.5)
        basis_[static_cast<std::size_t>(i)] = n_ + i;
      else
        needs_artificial.push_back(i);
    }
    const int art0 = cols_;
    if (!needs_artificial.empty()) {
      cols_ += static_cast<int>(needs_artificial.size());
      for (auto& row : rows_) row.resize(static_cast<std::size_t>(cols_), 0.0);
      for (std::size_t a = 0; a < needs_artificial.size(); ++a) {
        const int i = needs_artificial[a];
        rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(art0) + a] = 1.0;
        basis_[static_cast<std::size_t>(i)] = art0 + static_cast<int>(a);
      }
      std::vector<double> phase1(static_cast<std::size_t>(cols_), 0.0);
      for (int j = art0; j < cols_; ++j) phase1[static_cast<std::size_t>(j)] = -1.0;
      set_objective(phase1);
      if (!optimize()) throw std::logic_error("simplex: phase-1 objective unbounded");
      if (obj_rhs_ < -kFeasTol) return {LpStatus::Infeasible, 0.0, {}};
      purge_artificials(art0);
    }

    cols_ = art0;
    for (auto& row : rows_) row.resize(static_cast<std::size_t>(cols_));
    std::vector<double> phase2(static_cast<std::size_t>(cols_), 0.0);
    std::copy(c_.begin(), c_.end(), phase2.begin());
    set_objective(phase2);
    if (!optimize()) return {LpStatus::Unbounded, 0.0, {}};

    LpResult out;
    out.status = LpStatus::Optimal;
    out.value = obj_rhs_;
    out.x.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[static_cast<std::size_t>(i)];
      if (b >= 0 && b < n_)
        out.x[static_cast<std::size_t>(b)] = std::max(0.0, rhs_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kCostTol = 1e-9;
  static constexpr double kFeasTol = 1e-7;

  void init_row(int i, const std::vector<double>& coeffs, double b, int slack_col) {
    if (static_cast<int>(coeffs.size()) != n_)
      throw std::invalid_argument("simplex: constraint row has wrong variable count");
    auto& row = rows_[static_cast<std::size_t>(i)];
    row.assign(static_cast<std::size_t>(cols_), 0.0);
    std::copy(coeffs.begin(), coeffs.end(), row.begin());
    if (slack_col >= 0) row[static_cast<std::size_t>(slack_col)] = 1.0;
    rhs_[static_cast<std::size_t>(i)] = b;
  }

  // Reduced-cost row: obj_[j] = z_j - c_j (zero on basic columns) and
  // obj_rhs_ = current objective value.
  void set_objective(const std::vector<double>& cost) {
    obj_.assign(static_cast<std::size_t>(cols_), 0.0);
    obj_rhs_ = 0.0;
    for (int j = 0; j < cols_; ++j) obj_[static_cast<std::size_t>(j)] = -cost[static_cast<std::size_t>(j)];
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      const auto& row = rows_[static_cast<std::size_t>(i)];
      for (int j = 0; j < cols_; ++j) obj_[static_cast<std::size_t>(j)] += cb * row[static_cast<std::size_t>(j)];
      obj_rhs_ += cb * rhs_[static_cast<std::size_t>(i)];
    }
  }

  void pivot(int r, int jcol) {
    auto& prow = rows_[static_cast<std::size_t>(r)];
    const double p = prow[static_cast<std::size_t>(jcol)];
    const double inv = 1.0 / p;
    for (auto& v : prow) v *= inv;
    prow[static_cast<std::size_t>(jcol)] = 1.0;
    rhs_[static_cast<std::size_t>(r)] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      auto& row = rows_[static_cast<std::size_t>(i)];
      const double a = row[static_cast<std::size_t>(jcol)];
      if (a == 0.0) continue;
      for (int j = 0; j < cols_; ++j) row[static_cast<std::size_t>(j)] -= a * prow[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(jcol)] = 0.0;
      rhs_[static_cast<std::size_t>(i)] -= a * rhs_[static_cast<std::size_t>(r)];
    }
    const double a = obj_[static_cast<std::size_t>(jcol)];
    if (a != 0.0) {
      for (int j = 0; j < cols_; ++j) obj_[static_cast<std::size_t>(j)] -= a * prow[static_cast<std::size_t>(j)];
      obj_[static_cast<std::size_t>(jcol)] = 0.0;
      obj_rhs_ -= a * rhs_[static_cast<std::size_t>(r)];
    }
    basis_[static_cast<std::size_t>(r)] = jcol;
  }

  // Returns false when the objective is unbounded above.
  bool optimize() {
    const int stall_limit = 4 * (m_ + cols_) + 64;
    int stall = 0;
    bool bland = false;
    double last_obj = obj_rhs_;
    for (long iter = 0; iter < kMaxIters; ++iter) {
      int enter = -1;
      if (bland) {
        for (int j = 0; j < cols_; ++j) {
          if (obj_[static_cast<std::size_t>(j)] < -kCostTol) {
            enter = j;
            break;
          }
        }
      } else {
        double best = -kCostTol;
        for (int j = 0; j < cols_; ++j) {
          if (obj_[static_cast<std::size_t>(j)] < best) {
            best = obj_[static_cast<std::size_t>(j)];
            enter = j;
          }
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(enter)];
        if (a <= kPivotTol) continue;
        const double ratio = std::max(rhs_[static_cast<std::size_t>(i)], 0.0) / a;
        if (ratio < best_ratio - 1e-12) {
          leave = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + 1e-12 && leave >= 0 &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);

      if (!bland) {
        if (obj_rhs_ > last_obj + 1e-12) {
          stall = 0;
          last_obj = obj_rhs_;
        } else if (++stall > stall_limit) {
          bland = true;
        }
      }
    }
    throw std::logic_error("simplex: iteration limit reached");
  }

  // After phase 1, pivot leftover artificials out of the basis; rows that
  // cannot be pivoted are redundant and dropped.
  void purge_artificials(int art0) {
    for (int i = m_ - 1; i >= 0; --i) {
      if (basis_[static_cast<std::size_t>(i)] < art0) continue;
      int jpivot = -1;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) > kFeasTol) {
          jpivot = j;
          break;
        }
      }
      if (jpivot >= 0) {
        pivot(i, jpivot);
      } else {
        rows_.erase(rows_.begin() + i);
        rhs_.erase(rhs_.begin() + i);
        basis_.erase(basis_.begin() + i);
        --m_;
      }
    }
  }

  static constexpr long kMaxIters = 200000;

  std::vector<double> c_;
  int n_ = 0;
  int m_ = 0;
  int slack_ = 0;
  int cols_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
  std::vector<int> basis_;
  std::vector<double> obj_;
  double obj_rhs_ = 0.0;
};

}  // namespace detail

// maximize c.x subject to a_eq x = b_eq, a_ub x <= b_ub, x >= 0.
inline LpResult solve_lp(const std::vector<double>& c,
                         const std::vector<std::vector<double>>& a_eq,
                         const std::vector<double>& b_eq,
                         const std::vector<std::vector<double>>& a_ub,
                         const std::vector<double>& b_ub) {
  return detail::Simplex(c, a_eq, b_eq, a_ub, b_ub).solve();
}

}  // namespace renewal
