#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairlp/errors.hpp"

namespace fairlp {

/// Standard-form problem:
///   min c.z   s.t.   A_eq z = b_eq,   A_ub z <= b_ub,   z >= 0.
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<std::vector<double>> ub_rows;
  std::vector<double> ub_rhs;
  std::vector<std::string> names;  // one per column, for debugging/dumps

  void add_eq(std::vector<double> row, double rhs) {
    eq_rows.push_back(std::move(row));
    eq_rhs.push_back(rhs);
  }
  void add_ub(std::vector<double> row, double rhs) {
    ub_rows.push_back(std::move(row));
    ub_rhs.push_back(rhs);
  }

  void validate() const {
    auto check = [&](const std::vector<std::vector<double>>& rows,
                     const std::vector<double>& rhs, const char* what) {
      if (rows.size() != rhs.size()) throw InvalidProgram(std::string(what) + " rhs size mismatch");
      for (const auto& r : rows) {
        if (r.size() != num_vars) throw InvalidProgram(std::string(what) + " row width mismatch");
        for (double v : r)
          if (!std::isfinite(v)) throw InvalidProgram("non-finite coefficient");
      }
      for (double v : rhs)
        if (!std::isfinite(v)) throw InvalidProgram("non-finite rhs");
    };
    if (objective.size() != num_vars) throw InvalidProgram("objective size mismatch");
    for (double v : objective)
      if (!std::isfinite(v)) throw InvalidProgram("non-finite objective");
    check(eq_rows, eq_rhs, "equality");
    check(ub_rows, ub_rhs, "inequality");
    if (!names.empty() && names.size() != num_vars)
      throw InvalidProgram("name table size mismatch");
  }
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
  }
  return "?";
}

/// Result of a solve. The basis lists the basic columns over the structural +
/// slack column space; identical problems always yield identical bases, which
/// is what the trade-off curves use to detect segment boundaries.
struct LPSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
  std::vector<std::size_t> basis;
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kPivotTol = 1e-10;
inline constexpr double kFeasTol = 1e-9;

/// Dense two-phase primal simplex tableau with Bland's anti-cycling rule.
/// Column layout: [structural | slack (one per <= row) | artificial].
class SimplexTableau {
 public:
  explicit SimplexTableau(const LinearProgram& lp)
      : n_(lp.num_vars), m_ub_(lp.ub_rows.size()), m_(lp.eq_rows.size() + lp.ub_rows.size()) {
    lp.validate();
    cols_ = n_ + m_ub_ + m_;  // artificials allocated for every row; unused ones stay idle
    rows_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
    basic_.assign(m_, 0);
    active_.assign(m_, true);

    for (std::size_t i = 0; i < lp.eq_rows.size(); ++i) {
      for (std::size_t j = 0; j < n_; ++j) rows_[i][j] = lp.eq_rows[i][j];
      rows_[i][cols_] = lp.eq_rhs[i];
    }
    for (std::size_t k = 0; k < m_ub_; ++k) {
      std::size_t i = lp.eq_rows.size() + k;
      for (std::size_t j = 0; j < n_; ++j) rows_[i][j] = lp.ub_rows[k][j];
      rows_[i][n_ + k] = 1.0;  // slack
      rows_[i][cols_] = lp.ub_rhs[k];
    }
    // Normalize to b >= 0, then pick the initial basis: a +1 slack where one
    // survives the sign flip, an artificial otherwise.
    for (std::size_t i = 0; i < m_; ++i) {
      if (rows_[i][cols_] < 0.0)
        for (double& v : rows_[i]) v = -v;
      std::size_t slack = (i >= lp.eq_rows.size()) ? n_ + (i - lp.eq_rows.size()) : cols_;
      if (slack < cols_ && rows_[i][slack] > 0.5) {
        basic_[i] = slack;
      } else {
        basic_[i] = n_ + m_ub_ + i;
        rows_[i][basic_[i]] = 1.0;
        artificial_rows_.push_back(i);
      }
    }
  }

  /// Runs both phases; returns a status. On kOptimal the primal vector and
  /// basis can be read off.
  SolveStatus solve(const std::vector<double>& objective) {
    // Phase 1: minimize the sum of artificials.
    if (!artificial_rows_.empty()) {
      std::vector<double> phase1(cols_, 0.0);
      for (std::size_t j = n_ + m_ub_; j < cols_; ++j) phase1[j] = 1.0;
      build_cost_row(phase1);
      if (!iterate(/*forbid_artificial=*/false)) return SolveStatus::kUnbounded;  // cannot happen
      if (-cost_[cols_] > kFeasTol) return SolveStatus::kInfeasible;
      eliminate_artificials();
    }
    // Phase 2.
    std::vector<double> full(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) full[j] = objective[j];
    build_cost_row(full);
    if (!iterate(/*forbid_artificial=*/true)) return SolveStatus::kUnbounded;
    return SolveStatus::kOptimal;
  }

  bool phase1_feasible() {
    if (artificial_rows_.empty()) return true;
    std::vector<double> phase1(cols_, 0.0);
    for (std::size_t j = n_ + m_ub_; j < cols_; ++j) phase1[j] = 1.0;
    build_cost_row(phase1);
    iterate(/*forbid_artificial=*/false);
    return -cost_[cols_] <= kFeasTol;
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (active_[i] && basic_[i] < n_) x[basic_[i]] = rows_[i][cols_];
    return x;
  }

  std::vector<std::size_t> basis() const {
    std::vector<std::size_t> b;
    for (std::size_t i = 0; i < m_; ++i)
      if (active_[i] && basic_[i] < n_ + m_ub_) b.push_back(basic_[i]);
    std::sort(b.begin(), b.end());
    return b;
  }

  std::size_t iterations() const { return iterations_; }

 private:
  void build_cost_row(const std::vector<double>& c) {
    cost_.assign(cols_ + 1, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) cost_[j] = c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      if (!active_[i]) continue;
      double cb = c[basic_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) cost_[j] -= cb * rows_[i][j];
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    double piv = rows_[r][c];
    for (double& v : rows_[r]) v /= piv;
    rows_[r][c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || !active_[i]) continue;
      double f = rows_[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) rows_[i][j] -= f * rows_[r][j];
      rows_[i][c] = 0.0;
    }
    double f = cost_[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= cols_; ++j) cost_[j] -= f * rows_[r][j];
      cost_[c] = 0.0;
    }
    basic_[r] = c;
    ++iterations_;
  }

  /// Bland's rule: entering = lowest eligible column with negative reduced
  /// cost; leaving = lowest basic index among the minimum-ratio rows.
  bool iterate(bool forbid_artificial) {
    const std::size_t limit = forbid_artificial ? n_ + m_ub_ : cols_;
    while (true) {
      if (iterations_ > kMaxIterations)
        throw NumericalFailure("simplex iteration guard exhausted");
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < limit; ++j) {
        if (cost_[j] < -kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter == cols_) return true;  // optimal
      std::size_t leave = m_;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (!active_[i]) continue;
        double a = rows_[i][enter];
        if (a <= kPivotTol) continue;
        double ratio = rows_[i][cols_] / a;
        if (leave == m_ || ratio < best_ratio - kPivotTol ||
            (std::abs(ratio - best_ratio) <= kPivotTol && basic_[i] < basic_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave == m_) return false;  // unbounded
      pivot(leave, enter);
    }
  }

  /// After phase 1, pivot surviving zero-valued artificials out of the basis;
  /// rows that cannot be pivoted are redundant and get dropped.
  void eliminate_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!active_[i] || basic_[i] < n_ + m_ub_) continue;
      std::size_t col = cols_;
      for (std::size_t j = 0; j < n_ + m_ub_; ++j) {
        if (std::abs(rows_[i][j]) > kPivotTol) {
          col = j;
          break;
        }
      }
      if (col == cols_) {
        active_[i] = false;
      } else {
        pivot(i, col);
      }
    }
  }

  static constexpr std::size_t kMaxIterations = 200000;

  std::size_t n_, m_ub_, m_, cols_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<double> cost_;
  std::vector<std::size_t> basic_;
  std::vector<bool> active_;
  std::vector<std::size_t> artificial_rows_;
  std::size_t iterations_ = 0;
};

}  // namespace detail

/// Solves the program with a deterministic two-phase simplex. On kOptimal the
/// solution satisfies the stated residual bounds (checked before returning).
inline LPSolution solve(const LinearProgram& lp) {
  detail::SimplexTableau tab(lp);
  LPSolution out;
  out.status = tab.solve(lp.objective);
  out.iterations = tab.iterations();
  if (out.status != SolveStatus::kOptimal) return out;
  out.x = tab.primal();
  out.basis = tab.basis();
  for (double& v : out.x) {
    if (v < -detail::kFeasTol) throw NumericalFailure("negative primal entry after solve");
    if (v < 0.0) v = 0.0;  // numerically-zero basic variables
  }
  double value = 0.0;
  for (std::size_t j = 0; j < lp.num_vars; ++j) value += lp.objective[j] * out.x[j];
  out.value = value;
  for (std::size_t i = 0; i < lp.eq_rows.size(); ++i) {
    double acc = -lp.eq_rhs[i];
    for (std::size_t j = 0; j < lp.num_vars; ++j) acc += lp.eq_rows[i][j] * out.x[j];
    if (std::abs(acc) > detail::kFeasTol)
      throw NumericalFailure("equality residual above 1e-9 after solve");
  }
  for (std::size_t i = 0; i < lp.ub_rows.size(); ++i) {
    double acc = -lp.ub_rhs[i];
    for (std::size_t j = 0; j < lp.num_vars; ++j) acc += lp.ub_rows[i][j] * out.x[j];
    if (acc > detail::kFeasTol)
      throw NumericalFailure("inequality residual above 1e-9 after solve");
  }
  return out;
}

/// Phase-one feasibility test.
inline bool feasible(const LinearProgram& lp) {
  detail::SimplexTableau tab(lp);
  return tab.phase1_feasible();
}

}  // namespace fairlp
