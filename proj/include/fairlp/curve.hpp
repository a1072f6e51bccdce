#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "fairlp/errors.hpp"
#include "fairlp/prob.hpp"

namespace fairlp {

/// Budget grid for a trade-off sweep: either an explicit list of D values or
/// a uniform count over [d_min, d_max_bound].
struct GridSpec {
  std::vector<double> explicit_points;
  std::size_t count = 33;
};

/// One solved point of a trade-off curve.
struct CurvePoint {
  double budget = 0.0;
  double disc = 0.0;
  GroupChannels channel;
  std::vector<std::size_t> basis;
};

/// Verified structural properties, attached to every curve.
struct CurveChecks {
  bool nonincreasing = true;
  bool convex = true;
  double worst_increase = 0.0;           // max of disc[i+1] - disc[i]
  double worst_second_difference = 0.0;  // min of disc[i+1] - 2 disc[i] + disc[i-1]
};

/// Piecewise-linear map D -> Disc with basis breakpoints.
struct TradeoffCurve {
  std::vector<CurvePoint> points;
  std::vector<double> breakpoints;  // refined to 1e-6 in D
  double d_min = 0.0;
  double d_max = 0.0;  // smallest budget with disc below the zero threshold
  CurveChecks checks;
};

/// Result of one discrimination solve at a fixed budget.
struct DiscSolve {
  double disc = 0.0;
  GroupChannels channel;
  std::vector<std::size_t> basis;
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kBreakpointTolD = 1e-6;
inline constexpr double kChordTol = 1e-9;  // linearity threshold, well under the 1e-7 contract

inline std::vector<double> make_grid(const GridSpec& grid, double lo, double hi) {
  if (!grid.explicit_points.empty()) {
    std::vector<double> d = grid.explicit_points;
    std::sort(d.begin(), d.end());
    return d;
  }
  if (grid.count == 0) throw InvalidInput("empty grid");
  std::vector<double> d;
  if (grid.count == 1 || hi <= lo) {
    d.push_back(lo);
    return d;
  }
  d.reserve(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i)
    d.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.count - 1));
  return d;
}

/// Solves every grid point (optionally across threads), then locates the
/// kinks between neighbouring points by recursive chord tests.
template <class SolveFn>
TradeoffCurve sweep_curve(SolveFn&& solve_at, double d_min, double grid_lo, double grid_hi,
                          const GridSpec& grid, unsigned jobs = 1) {
  TradeoffCurve curve;
  curve.d_min = d_min;
  std::vector<double> budgets = make_grid(grid, grid_lo, grid_hi);
  for (double b : budgets)
    if (b < d_min - 1e-12)
      throw InfeasibleBudget("grid point below the minimum feasible distortion", d_min);

  curve.points.resize(budgets.size());
  auto solve_point = [&](std::size_t i) {
    DiscSolve s = solve_at(budgets[i]);
    curve.points[i] = CurvePoint{budgets[i], s.disc, std::move(s.channel), std::move(s.basis)};
  };
  if (jobs <= 1 || budgets.size() < 2) {
    for (std::size_t i = 0; i < budgets.size(); ++i) solve_point(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t width = std::min<std::size_t>(jobs, budgets.size());
    for (std::size_t t = 0; t < width; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < budgets.size(); i += width) solve_point(i);
      });
    for (auto& th : pool) th.join();
  }

  // Segment detection. The value function is convex and piecewise linear in
  // the budget, so it is linear on an interval exactly when its midpoint lies
  // on the chord; recursing on the failing halves pins every kink to 1e-6.
  // A kink is where the optimal basis of the parametric program changes;
  // degenerate basis swaps along a single linear piece are not breakpoints
  // (the flat segments of an already-fair instance swap slack bases without
  // bending the curve).
  {
    auto scan = [&](auto&& self, double lo, double hi, double flo, double fhi) -> bool {
      if (hi - lo <= kBreakpointTolD) {
        curve.breakpoints.push_back(0.5 * (lo + hi));
        return true;
      }
      double mid = 0.5 * (lo + hi);
      double fm = solve_at(mid).disc;
      if (std::abs(fm - 0.5 * (flo + fhi)) <= kChordTol) return false;
      bool found = self(self, lo, mid, flo, fm);
      if (self(self, mid, hi, fm, fhi)) found = true;
      if (!found) curve.breakpoints.push_back(mid);  // kink exactly at the probe
      return true;
    };
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i)
      scan(scan, curve.points[i].budget, curve.points[i + 1].budget, curve.points[i].disc,
           curve.points[i + 1].disc);
    std::sort(curve.breakpoints.begin(), curve.breakpoints.end());
    // Kinks closer than the refinement resolution collapse into one report.
    std::vector<double> merged;
    for (double b : curve.breakpoints) {
      if (!merged.empty() && b - merged.back() <= 2.0 * kBreakpointTolD)
        merged.back() = 0.5 * (merged.back() + b);
      else
        merged.push_back(b);
    }
    curve.breakpoints = std::move(merged);
  }

  auto& c = curve.checks;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i)
    c.worst_increase = std::max(c.worst_increase,
                                curve.points[i + 1].disc - curve.points[i].disc);
  c.nonincreasing = c.worst_increase <= 1e-9;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < curve.points.size(); ++i)
    worst = std::min(worst, curve.points[i + 1].disc - 2.0 * curve.points[i].disc +
                                curve.points[i - 1].disc);
  c.worst_second_difference = worst;
  c.convex = worst >= -1e-7;
  return curve;
}

}  // namespace detail

}  // namespace fairlp
