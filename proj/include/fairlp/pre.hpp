#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairlp/curve.hpp"
#include "fairlp/errors.hpp"
#include "fairlp/lp.hpp"
#include "fairlp/prob.hpp"

namespace fairlp {

enum class Criterion { kEqualizedOdds, kDemographicParity };
enum class DistortionMode { kGlobal, kPerX };

/// Pre-processing design problem: pick P_{Xt|X} (or P_{Xt|X,A}) ahead of the
/// fixed classifier W so that discrimination is minimal under a distortion
/// budget.
struct PreProblem {
  JointDistribution joint;
  Channel w;
  DistortionMatrix d;
  bool use_a = true;
  Criterion criterion = Criterion::kEqualizedOdds;
  DistortionMode distortion_mode = DistortionMode::kGlobal;

  void validate() const {
    if (w.in_size() != joint.nx() || w.out_size() != joint.ny())
      throw InvalidInput("classifier shape inconsistent with joint");
    if (d.size() != joint.ny()) throw InvalidInput("distortion shape inconsistent with joint");
  }
};

namespace detail {

/// Column layout of the pre LP: [t block | pre-channel block | induced block].
struct PreLayout {
  std::size_t nx = 0, ny = 0;
  bool use_a = true;
  bool parity = false;  // demographic parity swaps the (y, yhat) blocks for yhat-only ones

  std::size_t t_count() const { return parity ? ny : ny * ny; }
  std::size_t pre_count() const { return (use_a ? 2 : 1) * nx * nx; }
  std::size_t ind_count() const { return kNumGroups * (parity ? ny : ny * ny); }
  std::size_t total() const { return t_count() + pre_count() + ind_count(); }

  std::size_t t_eo(std::size_t y, std::size_t yh) const { return y * ny + yh; }
  std::size_t t_dp(std::size_t yh) const { return yh; }
  std::size_t pre(std::size_t a, std::size_t x, std::size_t xt) const {
    std::size_t base = t_count();
    return base + (use_a ? (a * nx + x) * nx + xt : x * nx + xt);
  }
  std::size_t ind_eo(std::size_t a, std::size_t y, std::size_t yh) const {
    return t_count() + pre_count() + (a * ny + y) * ny + yh;
  }
  std::size_t ind_dp(std::size_t a, std::size_t yh) const {
    return t_count() + pre_count() + a * ny + yh;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n(total());
    for (std::size_t y = 0; y < (parity ? 1 : ny); ++y)
      for (std::size_t yh = 0; yh < ny; ++yh)
        n[parity ? t_dp(yh) : t_eo(y, yh)] =
            parity ? "t[" + std::to_string(yh) + "]"
                   : "t[" + std::to_string(y) + "," + std::to_string(yh) + "]";
    for (std::size_t a = 0; a < (use_a ? 2u : 1u); ++a)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t xt = 0; xt < nx; ++xt)
          n[pre(a, x, xt)] = "pre" + (use_a ? "[a=" + std::to_string(a) + "]" : std::string()) +
                             "(" + std::to_string(xt) + "|" + std::to_string(x) + ")";
    for (std::size_t a = 0; a < kNumGroups; ++a) {
      if (parity) {
        for (std::size_t yh = 0; yh < ny; ++yh)
          n[ind_dp(a, yh)] = "ind[a=" + std::to_string(a) + "](" + std::to_string(yh) + ")";
      } else {
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t yh = 0; yh < ny; ++yh)
            n[ind_eo(a, y, yh)] = "ind[a=" + std::to_string(a) + "](" + std::to_string(yh) +
                                  "|" + std::to_string(y) + ")";
      }
    }
    return n;
  }
};

inline PreLayout pre_layout(const PreProblem& p) {
  return PreLayout{p.joint.nx(), p.joint.ny(), p.use_a,
                   p.criterion == Criterion::kDemographicParity};
}

/// Expected-cost coefficient of pre-channel entry (a, x, xt) in the distortion
/// row: sum_{y, yhat} W(yhat|xt) P(a, x, y) d(y, yhat).
inline double pre_distortion_coef(const PreProblem& p, std::size_t a, std::size_t x,
                                  std::size_t xt) {
  double acc = 0.0;
  for (std::size_t y = 0; y < p.joint.ny(); ++y) {
    double pj = p.joint.p(a, x, y);
    if (pj == 0.0) continue;
    for (std::size_t yh = 0; yh < p.joint.ny(); ++yh) acc += p.w(xt, yh) * pj * p.d(y, yh);
  }
  return acc;
}

}  // namespace detail

/// Transcription of the pre-processing LP at budget D. Constraint families:
/// two-sided t linearization, the distortion budget row(s), the channel
/// composition equalities, and simplex rows on both channel blocks.
/// Zero-mass (y, a) cells contribute no rows.
inline LinearProgram build_pre_lp(const PreProblem& prob, double D) {
  prob.validate();
  if (!std::isfinite(D)) throw InvalidInput("budget must be finite");
  const auto& joint = prob.joint;
  const std::size_t nx = joint.nx(), ny = joint.ny();
  const detail::PreLayout L = detail::pre_layout(prob);

  LinearProgram lp;
  lp.num_vars = L.total();
  lp.objective.assign(lp.num_vars, 0.0);
  lp.names = L.names();

  auto pre_cols = [&](std::size_t a, std::size_t x, std::size_t xt) {
    return L.pre(a, x, xt);  // tied layout already folds a away
  };

  if (!L.parity) {
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t yh = 0; yh < ny; ++yh) lp.objective[L.t_eo(y, yh)] = joint.p_y(y);

    // |ind0 - ind1| <= t, both signs, for y values present in both groups.
    for (std::size_t y = 0; y < ny; ++y) {
      if (joint.p_ya(y, 0) <= 0.0 || joint.p_ya(y, 1) <= 0.0) continue;
      for (std::size_t yh = 0; yh < ny; ++yh) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_eo(0, y, yh)] = 1.0;
        row[L.ind_eo(1, y, yh)] = -1.0;
        row[L.t_eo(y, yh)] = -1.0;
        lp.add_ub(row, 0.0);
        row[L.ind_eo(0, y, yh)] = -1.0;
        row[L.ind_eo(1, y, yh)] = 1.0;
        lp.add_ub(std::move(row), 0.0);
      }
    }

    // Composition: ind(a, y, .) = W applied after the pre-channel and P(x|y,a).
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t y = 0; y < ny; ++y) {
        if (joint.p_ya(y, a) <= 0.0) continue;
        for (std::size_t yh = 0; yh < ny; ++yh) {
          std::vector<double> row(lp.num_vars, 0.0);
          row[L.ind_eo(a, y, yh)] = 1.0;
          for (std::size_t x = 0; x < nx; ++x) {
            double px = joint.p_x_given_ya(x, y, a);
            if (px == 0.0) continue;
            for (std::size_t xt = 0; xt < nx; ++xt)
              row[pre_cols(a, x, xt)] -= prob.w(xt, yh) * px;
          }
          lp.add_eq(std::move(row), 0.0);
        }
        std::vector<double> sum_row(lp.num_vars, 0.0);
        for (std::size_t yh = 0; yh < ny; ++yh) sum_row[L.ind_eo(a, y, yh)] = 1.0;
        lp.add_eq(std::move(sum_row), 1.0);
      }
  } else {
    for (std::size_t yh = 0; yh < ny; ++yh) lp.objective[L.t_dp(yh)] = 1.0;

    bool both_groups = joint.p_a(0) > 0.0 && joint.p_a(1) > 0.0;
    if (both_groups)
      for (std::size_t yh = 0; yh < ny; ++yh) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_dp(0, yh)] = 1.0;
        row[L.ind_dp(1, yh)] = -1.0;
        row[L.t_dp(yh)] = -1.0;
        lp.add_ub(row, 0.0);
        row[L.ind_dp(0, yh)] = -1.0;
        row[L.ind_dp(1, yh)] = 1.0;
        lp.add_ub(std::move(row), 0.0);
      }

    for (std::size_t a = 0; a < kNumGroups; ++a) {
      if (joint.p_a(a) <= 0.0) continue;
      for (std::size_t yh = 0; yh < ny; ++yh) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_dp(a, yh)] = 1.0;
        for (std::size_t x = 0; x < nx; ++x) {
          double px = joint.p_x_given_a(x, a);
          if (px == 0.0) continue;
          for (std::size_t xt = 0; xt < nx; ++xt)
            row[pre_cols(a, x, xt)] -= prob.w(xt, yh) * px;
        }
        lp.add_eq(std::move(row), 0.0);
      }
      std::vector<double> sum_row(lp.num_vars, 0.0);
      for (std::size_t yh = 0; yh < ny; ++yh) sum_row[L.ind_dp(a, yh)] = 1.0;
      lp.add_eq(std::move(sum_row), 1.0);
    }
  }

  // Distortion budget.
  if (prob.distortion_mode == DistortionMode::kGlobal) {
    std::vector<double> row(lp.num_vars, 0.0);
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t xt = 0; xt < nx; ++xt)
          row[pre_cols(a, x, xt)] += detail::pre_distortion_coef(prob, a, x, xt);
    lp.add_ub(std::move(row), D);
  } else {
    for (std::size_t x = 0; x < nx; ++x) {
      double px = joint.p_x(x);
      if (px <= 0.0) continue;
      std::vector<double> row(lp.num_vars, 0.0);
      for (std::size_t a = 0; a < kNumGroups; ++a)
        for (std::size_t xt = 0; xt < nx; ++xt)
          row[pre_cols(a, x, xt)] += detail::pre_distortion_coef(prob, a, x, xt) / px;
      lp.add_ub(std::move(row), D);
    }
  }

  // Simplex rows on the pre-channel block.
  for (std::size_t a = 0; a < (prob.use_a ? 2u : 1u); ++a)
    for (std::size_t x = 0; x < nx; ++x) {
      std::vector<double> row(lp.num_vars, 0.0);
      for (std::size_t xt = 0; xt < nx; ++xt) row[L.pre(a, x, xt)] = 1.0;
      lp.add_eq(std::move(row), 1.0);
    }

  return lp;
}

/// Closed-form minimum feasible budget and the deterministic channel that
/// attains it. Ties in the per-(x, a) argmin break to the lowest index.
struct DMinResult {
  double value = 0.0;
  GroupChannels channel;
};

inline DMinResult d_min_pre(const PreProblem& prob) {
  prob.validate();
  const std::size_t nx = prob.joint.nx();
  std::vector<std::size_t> map0(nx, 0), map1(nx, 0);
  auto cost = [&](std::size_t a, std::size_t x, std::size_t xt) {
    return detail::pre_distortion_coef(prob, a, x, xt);
  };
  if (prob.use_a) {
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t x = 0; x < nx; ++x) {
        std::size_t best = 0;
        double best_cost = cost(a, x, 0);
        for (std::size_t xt = 1; xt < nx; ++xt) {
          double c = cost(a, x, xt);
          if (c < best_cost) {
            best_cost = c;
            best = xt;
          }
        }
        (a == 0 ? map0 : map1)[x] = best;
      }
  } else {
    for (std::size_t x = 0; x < nx; ++x) {
      std::size_t best = 0;
      double best_cost = cost(0, x, 0) + cost(1, x, 0);
      for (std::size_t xt = 1; xt < nx; ++xt) {
        double c = cost(0, x, xt) + cost(1, x, xt);
        if (c < best_cost) {
          best_cost = c;
          best = xt;
        }
      }
      map0[x] = map1[x] = best;
    }
  }
  GroupChannels ch{{Channel::deterministic(map0, nx), Channel::deterministic(map1, nx)}};

  double value;
  if (prob.distortion_mode == DistortionMode::kGlobal) {
    value = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
      value += cost(0, x, map0[x]) + cost(1, x, map1[x]);
  } else {
    // Rows are independent, so the global argmin channel also minimizes every
    // conditional row; the binding budget is the worst x.
    value = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      double px = prob.joint.p_x(x);
      if (px <= 0.0) continue;
      value = std::max(value, (cost(0, x, map0[x]) + cost(1, x, map1[x])) / px);
    }
  }
  return DMinResult{value, std::move(ch)};
}

/// Budget at which the uniform pre-channel (hence zero discrimination) is
/// affordable; the closed-form upper bound for D_max.
inline double d_max_bound_pre(const PreProblem& prob) {
  prob.validate();
  const std::size_t nx = prob.joint.nx(), ny = prob.joint.ny();
  if (prob.distortion_mode == DistortionMode::kGlobal) {
    double acc = 0.0;
    for (std::size_t xt = 0; xt < nx; ++xt)
      for (std::size_t y = 0; y < ny; ++y) {
        double py = prob.joint.p_y(y);
        if (py == 0.0) continue;
        for (std::size_t yh = 0; yh < ny; ++yh) acc += prob.w(xt, yh) * py * prob.d(y, yh);
      }
    return acc / static_cast<double>(nx);
  }
  double bound = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    double px = prob.joint.p_x(x);
    if (px <= 0.0) continue;
    double acc = 0.0;
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t xt = 0; xt < nx; ++xt)
        acc += detail::pre_distortion_coef(prob, a, x, xt) / static_cast<double>(nx);
    bound = std::max(bound, acc / px);
  }
  return bound;
}

namespace detail {

inline GroupChannels extract_pre_channels(const PreProblem& prob, const PreLayout& L,
                                          const std::vector<double>& x) {
  const std::size_t nx = prob.joint.nx();
  auto block = [&](std::size_t a) {
    Matrix k(nx, nx);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nx; ++j) k(i, j) = x[L.pre(a, i, j)];
    return Channel::from_solver(std::move(k));
  };
  if (prob.use_a) return GroupChannels{{block(0), block(1)}};
  return GroupChannels::tied(block(0));
}

}  // namespace detail

/// Optimal discrimination at budget D with the achieving pre-channel(s).
inline DiscSolve disc_pre(const PreProblem& prob, double D) {
  DMinResult dmin = d_min_pre(prob);
  if (D < dmin.value - 1e-12)
    throw InfeasibleBudget("budget below minimum feasible distortion", dmin.value);
  LinearProgram lp = build_pre_lp(prob, D);
  LPSolution sol = solve(lp);
  if (sol.status == SolveStatus::kInfeasible)
    throw InfeasibleBudget("budget below minimum feasible distortion", dmin.value);
  if (sol.status != SolveStatus::kOptimal)
    throw NumericalFailure("pre LP reported unbounded");  // objective >= 0 rules this out
  return DiscSolve{sol.value, detail::extract_pre_channels(prob, detail::pre_layout(prob), sol.x),
                   std::move(sol.basis), sol.iterations};
}

/// Smallest budget with discrimination <= eps, by bisection between the
/// closed-form D_min and D_max bound.
inline double d_max_exact(const PreProblem& prob, double eps = 1e-9) {
  DMinResult dmin = d_min_pre(prob);
  if (disc_pre(prob, dmin.value).disc <= eps) return dmin.value;
  double lo = dmin.value, hi = d_max_bound_pre(prob);
  while (hi - lo > 1e-7) {
    double mid = 0.5 * (lo + hi);
    if (disc_pre(prob, mid).disc <= eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Sweeps the budget grid, refines basis breakpoints, and attaches the
/// verified curve checks.
inline TradeoffCurve tradeoff_curve(const PreProblem& prob, const GridSpec& grid = {},
                                    unsigned jobs = 1) {
  DMinResult dmin = d_min_pre(prob);
  double hi = d_max_bound_pre(prob);
  TradeoffCurve curve = detail::sweep_curve([&](double D) { return disc_pre(prob, D); },
                                            dmin.value, dmin.value, hi, grid, jobs);
  curve.d_max = d_max_exact(prob);
  return curve;
}

}  // namespace fairlp
