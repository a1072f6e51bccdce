#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairlp/curve.hpp"
#include "fairlp/errors.hpp"
#include "fairlp/lp.hpp"
#include "fairlp/pre.hpp"
#include "fairlp/prob.hpp"

namespace fairlp {

/// Post-processing design problem: pick P_{Yp|Yo,A} downstream of the fixed
/// classifier, given only the prediction joint P_{Yo,Y,A}.
struct PostProblem {
  PredictionJoint pred;
  DistortionMatrix d;
  Criterion criterion = Criterion::kEqualizedOdds;

  void validate() const {
    if (d.size() != pred.ny()) throw InvalidInput("distortion shape inconsistent with joint");
  }
};

namespace detail {

struct PostLayout {
  std::size_t ny = 0;
  bool parity = false;

  std::size_t t_count() const { return parity ? ny : ny * ny; }
  std::size_t post_count() const { return kNumGroups * ny * ny; }
  std::size_t ind_count() const { return kNumGroups * (parity ? ny : ny * ny); }
  std::size_t total() const { return t_count() + post_count() + ind_count(); }

  std::size_t t_eo(std::size_t y, std::size_t yp) const { return y * ny + yp; }
  std::size_t t_dp(std::size_t yp) const { return yp; }
  std::size_t post(std::size_t a, std::size_t yo, std::size_t yp) const {
    return t_count() + (a * ny + yo) * ny + yp;
  }
  std::size_t ind_eo(std::size_t a, std::size_t y, std::size_t yp) const {
    return t_count() + post_count() + (a * ny + y) * ny + yp;
  }
  std::size_t ind_dp(std::size_t a, std::size_t yp) const {
    return t_count() + post_count() + a * ny + yp;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n(total());
    if (parity) {
      for (std::size_t yp = 0; yp < ny; ++yp) n[t_dp(yp)] = "t[" + std::to_string(yp) + "]";
    } else {
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t yp = 0; yp < ny; ++yp)
          n[t_eo(y, yp)] = "t[" + std::to_string(y) + "," + std::to_string(yp) + "]";
    }
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t yo = 0; yo < ny; ++yo)
        for (std::size_t yp = 0; yp < ny; ++yp)
          n[post(a, yo, yp)] = "post[a=" + std::to_string(a) + "](" + std::to_string(yp) +
                               "|" + std::to_string(yo) + ")";
    for (std::size_t a = 0; a < kNumGroups; ++a) {
      if (parity) {
        for (std::size_t yp = 0; yp < ny; ++yp)
          n[ind_dp(a, yp)] = "ind[a=" + std::to_string(a) + "](" + std::to_string(yp) + ")";
      } else {
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t yp = 0; yp < ny; ++yp)
            n[ind_eo(a, y, yp)] = "ind[a=" + std::to_string(a) + "](" + std::to_string(yp) +
                                  "|" + std::to_string(y) + ")";
      }
    }
    return n;
  }
};

inline PostLayout post_layout(const PostProblem& p) {
  return PostLayout{p.pred.ny(), p.criterion == Criterion::kDemographicParity};
}

/// Coefficient of post(a, yo, yp) in the distortion row:
/// sum_y q(yo, y, a) d(y, yp).
inline double post_distortion_coef(const PostProblem& p, std::size_t a, std::size_t yo,
                                   std::size_t yp) {
  double acc = 0.0;
  for (std::size_t y = 0; y < p.pred.ny(); ++y) acc += p.pred.q(yo, y, a) * p.d(y, yp);
  return acc;
}

inline GroupChannels extract_post_channels(const PostProblem& prob, const PostLayout& L,
                                           const std::vector<double>& x) {
  const std::size_t ny = prob.pred.ny();
  auto block = [&](std::size_t a) {
    Matrix k(ny, ny);
    for (std::size_t i = 0; i < ny; ++i)
      for (std::size_t j = 0; j < ny; ++j) k(i, j) = x[L.post(a, i, j)];
    return Channel::from_solver(std::move(k));
  };
  return GroupChannels{{block(0), block(1)}};
}

}  // namespace detail

/// Transcription of the relaxed post-processing LP at budget D.
inline LinearProgram build_post_lp(const PostProblem& prob, double D) {
  prob.validate();
  if (!std::isfinite(D)) throw InvalidInput("budget must be finite");
  const auto& pj = prob.pred;
  const std::size_t ny = pj.ny();
  const detail::PostLayout L = detail::post_layout(prob);

  LinearProgram lp;
  lp.num_vars = L.total();
  lp.objective.assign(lp.num_vars, 0.0);
  lp.names = L.names();

  if (!L.parity) {
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t yp = 0; yp < ny; ++yp) lp.objective[L.t_eo(y, yp)] = pj.p_y(y);

    for (std::size_t y = 0; y < ny; ++y) {
      if (pj.p_ya(y, 0) <= 0.0 || pj.p_ya(y, 1) <= 0.0) continue;
      for (std::size_t yp = 0; yp < ny; ++yp) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_eo(0, y, yp)] = 1.0;
        row[L.ind_eo(1, y, yp)] = -1.0;
        row[L.t_eo(y, yp)] = -1.0;
        lp.add_ub(row, 0.0);
        row[L.ind_eo(0, y, yp)] = -1.0;
        row[L.ind_eo(1, y, yp)] = 1.0;
        lp.add_ub(std::move(row), 0.0);
      }
    }

    // Composition: ind(a, y, yp) = sum_yo post(a, yo, yp) P(yo | y, a).
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t y = 0; y < ny; ++y) {
        if (pj.p_ya(y, a) <= 0.0) continue;
        for (std::size_t yp = 0; yp < ny; ++yp) {
          std::vector<double> row(lp.num_vars, 0.0);
          row[L.ind_eo(a, y, yp)] = 1.0;
          for (std::size_t yo = 0; yo < ny; ++yo)
            row[L.post(a, yo, yp)] -= pj.p_yo_given_ya(yo, y, a);
          lp.add_eq(std::move(row), 0.0);
        }
        std::vector<double> sum_row(lp.num_vars, 0.0);
        for (std::size_t yp = 0; yp < ny; ++yp) sum_row[L.ind_eo(a, y, yp)] = 1.0;
        lp.add_eq(std::move(sum_row), 1.0);
      }
  } else {
    for (std::size_t yp = 0; yp < ny; ++yp) lp.objective[L.t_dp(yp)] = 1.0;

    bool both_groups = pj.p_a(0) > 0.0 && pj.p_a(1) > 0.0;
    if (both_groups)
      for (std::size_t yp = 0; yp < ny; ++yp) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_dp(0, yp)] = 1.0;
        row[L.ind_dp(1, yp)] = -1.0;
        row[L.t_dp(yp)] = -1.0;
        lp.add_ub(row, 0.0);
        row[L.ind_dp(0, yp)] = -1.0;
        row[L.ind_dp(1, yp)] = 1.0;
        lp.add_ub(std::move(row), 0.0);
      }

    for (std::size_t a = 0; a < kNumGroups; ++a) {
      if (pj.p_a(a) <= 0.0) continue;
      for (std::size_t yp = 0; yp < ny; ++yp) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_dp(a, yp)] = 1.0;
        for (std::size_t yo = 0; yo < ny; ++yo) {
          double pyo = 0.0;  // P(Yo = yo | A = a)
          for (std::size_t y = 0; y < ny; ++y) pyo += pj.q(yo, y, a);
          row[L.post(a, yo, yp)] -= pyo / pj.p_a(a);
        }
        lp.add_eq(std::move(row), 0.0);
      }
      std::vector<double> sum_row(lp.num_vars, 0.0);
      for (std::size_t yp = 0; yp < ny; ++yp) sum_row[L.ind_dp(a, yp)] = 1.0;
      lp.add_eq(std::move(sum_row), 1.0);
    }
  }

  std::vector<double> dist_row(lp.num_vars, 0.0);
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo)
      for (std::size_t yp = 0; yp < ny; ++yp)
        dist_row[L.post(a, yo, yp)] += detail::post_distortion_coef(prob, a, yo, yp);
  lp.add_ub(std::move(dist_row), D);

  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo) {
      std::vector<double> row(lp.num_vars, 0.0);
      for (std::size_t yp = 0; yp < ny; ++yp) row[L.post(a, yo, yp)] = 1.0;
      lp.add_eq(std::move(row), 1.0);
    }

  return lp;
}

/// Closed-form minimum feasible budget: the deterministic per-(yo, a) argmin.
inline DMinResult d_min_post(const PostProblem& prob) {
  prob.validate();
  const std::size_t ny = prob.pred.ny();
  double value = 0.0;
  std::array<std::vector<std::size_t>, kNumGroups> maps;
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    maps[a].assign(ny, 0);
    for (std::size_t yo = 0; yo < ny; ++yo) {
      std::size_t best = 0;
      double best_cost = detail::post_distortion_coef(prob, a, yo, 0);
      for (std::size_t yp = 1; yp < ny; ++yp) {
        double c = detail::post_distortion_coef(prob, a, yo, yp);
        if (c < best_cost) {
          best_cost = c;
          best = yp;
        }
      }
      maps[a][yo] = best;
      value += best_cost;
    }
  }
  return DMinResult{value, GroupChannels{{Channel::deterministic(maps[0], ny),
                                          Channel::deterministic(maps[1], ny)}}};
}

/// Distortion of the uniform post-channel; upper bound for D_max.
inline double d_max_bound_post(const PostProblem& prob) {
  prob.validate();
  const std::size_t ny = prob.pred.ny();
  double acc = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    double py = prob.pred.p_y(y);
    if (py == 0.0) continue;
    for (std::size_t yp = 0; yp < ny; ++yp) acc += py * prob.d(y, yp);
  }
  return acc / static_cast<double>(ny);
}

inline DiscSolve disc_post(const PostProblem& prob, double D) {
  DMinResult dmin = d_min_post(prob);
  if (D < dmin.value - 1e-12)
    throw InfeasibleBudget("budget below minimum feasible distortion", dmin.value);
  LinearProgram lp = build_post_lp(prob, D);
  LPSolution sol = solve(lp);
  if (sol.status == SolveStatus::kInfeasible)
    throw InfeasibleBudget("budget below minimum feasible distortion", dmin.value);
  if (sol.status != SolveStatus::kOptimal)
    throw NumericalFailure("post LP reported unbounded");
  return DiscSolve{sol.value,
                   detail::extract_post_channels(prob, detail::post_layout(prob), sol.x),
                   std::move(sol.basis), sol.iterations};
}

inline double d_max_exact_post(const PostProblem& prob, double eps = 1e-9) {
  DMinResult dmin = d_min_post(prob);
  if (disc_post(prob, dmin.value).disc <= eps) return dmin.value;
  double lo = dmin.value, hi = d_max_bound_post(prob);
  while (hi - lo > 1e-7) {
    double mid = 0.5 * (lo + hi);
    if (disc_post(prob, mid).disc <= eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Exact equalized odds: minimize distortion subject to equality of the two
/// groups' induced conditionals. Always feasible (constant channels satisfy
/// the equalities).
struct ExactEoResult {
  double distortion = 0.0;
  GroupChannels channel;
};

inline ExactEoResult exact_eo_post(const PostProblem& prob) {
  prob.validate();
  const auto& pj = prob.pred;
  const std::size_t ny = pj.ny();
  detail::PostLayout L{ny, /*parity=*/false};

  LinearProgram lp;
  lp.num_vars = L.total();
  lp.objective.assign(lp.num_vars, 0.0);
  lp.names = L.names();
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo)
      for (std::size_t yp = 0; yp < ny; ++yp)
        lp.objective[L.post(a, yo, yp)] = detail::post_distortion_coef(prob, a, yo, yp);

  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t y = 0; y < ny; ++y) {
      if (pj.p_ya(y, a) <= 0.0) continue;
      for (std::size_t yp = 0; yp < ny; ++yp) {
        std::vector<double> row(lp.num_vars, 0.0);
        row[L.ind_eo(a, y, yp)] = 1.0;
        for (std::size_t yo = 0; yo < ny; ++yo)
          row[L.post(a, yo, yp)] -= pj.p_yo_given_ya(yo, y, a);
        lp.add_eq(std::move(row), 0.0);
      }
      std::vector<double> sum_row(lp.num_vars, 0.0);
      for (std::size_t yp = 0; yp < ny; ++yp) sum_row[L.ind_eo(a, y, yp)] = 1.0;
      lp.add_eq(std::move(sum_row), 1.0);
    }

  // Equalized odds as exact rows, for every y present in both groups.
  for (std::size_t y = 0; y < ny; ++y) {
    if (pj.p_ya(y, 0) <= 0.0 || pj.p_ya(y, 1) <= 0.0) continue;
    for (std::size_t yp = 0; yp < ny; ++yp) {
      std::vector<double> row(lp.num_vars, 0.0);
      row[L.ind_eo(0, y, yp)] = 1.0;
      row[L.ind_eo(1, y, yp)] = -1.0;
      lp.add_eq(std::move(row), 0.0);
    }
  }

  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo) {
      std::vector<double> row(lp.num_vars, 0.0);
      for (std::size_t yp = 0; yp < ny; ++yp) row[L.post(a, yo, yp)] = 1.0;
      lp.add_eq(std::move(row), 1.0);
    }

  LPSolution sol = solve(lp);
  if (sol.status != SolveStatus::kOptimal)
    throw NumericalFailure("exact-EO program must be feasible and bounded");
  return ExactEoResult{sol.value, detail::extract_post_channels(prob, L, sol.x)};
}

inline TradeoffCurve tradeoff_curve_post(const PostProblem& prob, const GridSpec& grid = {},
                                         unsigned jobs = 1) {
  DMinResult dmin = d_min_post(prob);
  double hi = d_max_bound_post(prob);
  TradeoffCurve curve = detail::sweep_curve([&](double D) { return disc_post(prob, D); },
                                            dmin.value, dmin.value, hi, grid, jobs);
  curve.d_max = d_max_exact_post(prob);
  return curve;
}

}  // namespace fairlp
