#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "fairlp/errors.hpp"
#include "fairlp/post.hpp"
#include "fairlp/pre.hpp"
#include "fairlp/prob.hpp"

namespace fairlp {

/// Per-group (false alarm, detection) coordinates in the binary setting.
struct OperatingPoint {
  double false_alarm = 0.0;  // P(Yhat = 1 | Y = 0, a)
  double detection = 0.0;    // P(Yhat = 1 | Y = 1, a)
};

inline std::array<OperatingPoint, kNumGroups> operating_points(const CondPrediction& cp) {
  if (cp.ny != 2 || cp.nyhat != 2) throw UnsupportedShape("operating points need binary labels");
  std::array<OperatingPoint, kNumGroups> out;
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    if (!cp.row_defined(0, a) || !cp.row_defined(1, a))
      throw DegenerateConditioning("operating point on a zero-mass (y, a) cell");
    out[a] = OperatingPoint{cp.slice[a](0, 1), cp.slice[a](1, 1)};
  }
  return out;
}

/// Witnesses for the substitution condition: lowest x0 with W(1|x0) = 0 and
/// lowest x1 with W(1|x1) = 1, within tol.
inline std::optional<std::pair<std::size_t, std::size_t>> check_substitution(
    const Channel& w, double tol = 1e-9) {
  if (w.out_size() != 2) throw UnsupportedShape("substitution check needs binary predictions");
  std::optional<std::size_t> x0, x1;
  for (std::size_t x = 0; x < w.in_size(); ++x) {
    if (!x0 && std::abs(w(x, 1)) <= tol) x0 = x;
    if (!x1 && std::abs(1.0 - w(x, 1)) <= tol) x1 = x;
  }
  if (x0 && x1) return std::make_pair(*x0, *x1);
  return std::nullopt;
}

/// Rebuilds a post-processor as a pre-processor: each (x, a) row becomes the
/// convex combination of point masses at x0 and x1 that reproduces the
/// post-processed acceptance probability tau(x, a).
inline GroupChannels substitute_post_with_pre(const GroupChannels& post, const Channel& w,
                                              const JointDistribution& joint, std::size_t x0,
                                              std::size_t x1) {
  if (w.out_size() != 2) throw UnsupportedShape("substitution needs binary predictions");
  if (x0 >= joint.nx() || x1 >= joint.nx() || x0 == x1)
    throw SubstitutionUnavailable("invalid substitution witnesses");
  const std::size_t nx = joint.nx();
  std::array<Channel, kNumGroups> out;
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    if (post[a].in_size() != 2 || post[a].out_size() != 2)
      throw UnsupportedShape("substitution needs a binary post-channel");
    Matrix k(nx, nx);
    for (std::size_t x = 0; x < nx; ++x) {
      double tau = 0.0;
      for (std::size_t yo = 0; yo < 2; ++yo) tau += post[a](yo, 1) * w(x, yo);
      k(x, x0) = 1.0 - tau;
      k(x, x1) += tau;
    }
    out[a] = Channel(std::move(k), kSolverProbTol);
  }
  return GroupChannels{out};
}

/// Strict diagonal dominance of the prediction joint within each group.
inline bool is_proper(const PredictionJoint& pj) {
  if (pj.ny() != 2) throw UnsupportedShape("properness is defined for binary labels");
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    double tt = pj.q(1, 1, a), ff = pj.q(0, 0, a);
    double ft = pj.q(0, 1, a), tf = pj.q(1, 0, a);
    if (!(tt > ft && tt > tf && ff > ft && ff > tf)) return false;
  }
  return true;
}

enum class WitnessSide { kMinorityQualified, kMajorityUnqualified };

struct DominanceWitness {
  WitnessSide side;
  std::size_t x = 0;
};

/// Checks the minority-underprivileged convention, then scans for the lowest
/// witness index: a minority cell more likely qualified than not away from
/// x_max, or a majority cell more likely unqualified than not away from x_min.
inline std::optional<DominanceWitness> dominance_condition(const JointDistribution& joint,
                                                   const Channel& w) {
  if (joint.ny() != 2 || w.out_size() != 2)
    throw UnsupportedShape("the dominance condition is defined for binary labels");
  PredictionJoint pj = derive_pred_joint(w, joint);
  for (std::size_t y = 0; y < 2; ++y) {
    if (pj.p_ya(y, 0) <= 0.0 || pj.p_ya(y, 1) <= 0.0)
      throw DegenerateConditioning("convention check on a zero-mass (y, a) cell");
    if (!(pj.p_yo_given_ya(1, y, 0) > pj.p_yo_given_ya(1, y, 1)))
      throw ConventionViolated("majority group must have higher detection and false alarm");
  }
  std::size_t x_min = 0, x_max = 0;
  for (std::size_t x = 1; x < joint.nx(); ++x) {
    if (w(x, 1) < w(x_min, 1)) x_min = x;
    if (w(x, 1) > w(x_max, 1)) x_max = x;
  }
  for (std::size_t x = 0; x < joint.nx(); ++x) {
    if (x == x_max || joint.p_xa(x, 1) <= 0.0) continue;
    if (joint.p(1, x, 0) < joint.p(1, x, 1))
      return DominanceWitness{WitnessSide::kMinorityQualified, x};
  }
  for (std::size_t x = 0; x < joint.nx(); ++x) {
    if (x == x_min || joint.p_xa(x, 0) <= 0.0) continue;
    if (joint.p(0, x, 1) < joint.p(0, x, 0))
      return DominanceWitness{WitnessSide::kMajorityUnqualified, x};
  }
  return std::nullopt;
}

enum class Verdict { kPreDominates, kTie, kInconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPreDominates: return "pre_dominates";
    case Verdict::kTie: return "tie";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

/// Side-by-side closed-form and LP comparison of the two processing routes.
struct ComparisonReport {
  double d_min_pre_a = 0.0;
  double d_min_post = 0.0;
  double disc_at_dmin_pre = 0.0;
  double disc_at_dmin_post = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> substitution_witness;
  bool proper = false;
  bool convention_ok = false;  // witness fields are not applicable when false
  std::optional<DominanceWitness> dominance_witness;
  Verdict verdict = Verdict::kInconclusive;
  // Explicit dominating pre-channel found by the alpha sweep, when one exists.
  std::optional<double> exhibit_alpha;
  std::optional<double> exhibit_distortion;
  std::optional<double> exhibit_disc;
};

namespace detail {

/// Identity pre-processor that re-routes one witness row toward the target
/// feature with weight alpha.
inline GroupChannels exhibit_channel(std::size_t nx, std::size_t group, std::size_t row,
                                     std::size_t target, double alpha) {
  std::array<Channel, kNumGroups> out{Channel::identity(nx), Channel::identity(nx)};
  Matrix k = Matrix::identity(nx);
  k(row, row) = 1.0 - alpha;
  k(row, target) += alpha;
  out[group] = Channel(std::move(k));
  return GroupChannels{out};
}

}  // namespace detail

inline ComparisonReport compare_pre_post(const JointDistribution& joint, const Channel& w,
                                         const DistortionMatrix& d) {
  if (joint.ny() != 2) throw UnsupportedShape("comparison is defined for binary labels");
  PreProblem pre{joint, w, d, /*use_a=*/true};
  PostProblem post{derive_pred_joint(w, joint), d};

  ComparisonReport rep;
  DMinResult dmp = d_min_pre(pre);
  DMinResult dmq = d_min_post(post);
  rep.d_min_pre_a = dmp.value;
  rep.d_min_post = dmq.value;
  rep.disc_at_dmin_pre = disc_pre(pre, dmp.value).disc;
  rep.disc_at_dmin_post = disc_post(post, dmq.value).disc;
  rep.substitution_witness = check_substitution(w);
  rep.proper = is_proper(post.pred);

  if (rep.proper) {
    try {
      rep.dominance_witness = dominance_condition(joint, w);
      rep.convention_ok = true;
    } catch (const ConventionViolated&) {
      rep.convention_ok = false;
    }
  }

  if (rep.dominance_witness) {
    std::size_t x_min = 0, x_max = 0;
    for (std::size_t x = 1; x < joint.nx(); ++x) {
      if (w(x, 1) < w(x_min, 1)) x_min = x;
      if (w(x, 1) > w(x_max, 1)) x_max = x;
    }
    bool minority = rep.dominance_witness->side == WitnessSide::kMinorityQualified;
    std::size_t group = minority ? 1 : 0;
    std::size_t target = minority ? x_max : x_min;
    for (int step = 1; step <= 10; ++step) {
      double alpha = 0.1 * step;
      GroupChannels ch =
          detail::exhibit_channel(joint.nx(), group, rep.dominance_witness->x, target, alpha);
      double dist = expected_distortion(ch, w, joint, d);
      double disc = tv_discrimination(induced_prediction_channel(ch, w, joint, false),
                                      joint.y_marginal());
      if (dist < rep.d_min_post - 1e-9 && disc < rep.disc_at_dmin_post - 1e-9 &&
          (!rep.exhibit_disc || disc < *rep.exhibit_disc)) {
        rep.exhibit_alpha = alpha;
        rep.exhibit_distortion = dist;
        rep.exhibit_disc = disc;
      }
    }
  }

  if (rep.disc_at_dmin_pre <= 1e-9 && rep.disc_at_dmin_post <= 1e-9)
    rep.verdict = Verdict::kTie;
  else if (rep.d_min_pre_a < rep.d_min_post - 1e-9 &&
           rep.disc_at_dmin_pre < rep.disc_at_dmin_post - 1e-9)
    rep.verdict = Verdict::kPreDominates;
  else
    rep.verdict = Verdict::kInconclusive;
  return rep;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform sample from the probability simplex via exponential spacings.
inline std::vector<double> sample_simplex(std::mt19937_64& rng, std::size_t cells) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(cells);
  double total = 0.0;
  for (double& e : v) {
    e = exp1(rng);
    total += e;
  }
  for (double& e : v) e /= total;
  return v;
}

}  // namespace detail

struct ScatterPoint {
  double tv = 0.0;
  double mi = 0.0;
};

/// Draws n prediction joints uniformly from the simplex and reports both
/// discrimination measures per draw. Sample i depends only on (seed, i), so
/// the sequence is stable under any execution order.
inline std::vector<ScatterPoint> tv_mi_scatter(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("need at least one scatter sample");
  std::vector<ScatterPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(i)));
    PredictionJoint pj(2, detail::sample_simplex(rng, 8));
    out.push_back(ScatterPoint{tv_discrimination(cond_prediction(pj), pj.y_marginal()),
                               mutual_info_discrimination(pj)});
  }
  return out;
}

/// Grid-search oracle result; the optimum lies within [value - lipschitz *
/// step, value] of the LP optimum by the rounding argument.
struct OracleResult {
  double value = 0.0;
  double lipschitz = 0.0;
};

namespace detail {

/// Shared grid recursion over channel rows. Each row is a binary distribution
/// (the <= 4 free-parameter gate forces two-column channels), scanned over
/// {0, step, ..., 1}.
struct RowSpec {
  double cost0 = 0.0, cost1 = 0.0;  // distortion contribution of the two corners
  // contribution of the two corners to each group-conditional slice entry:
  // add[y][yhat] applied to group `group` (or both for tied rows).
  std::vector<double> add0, add1;  // flattened (y, yhat), per affected group stacked
};

template <class Leaf>
void scan_rows(const std::vector<RowSpec>& rows, std::size_t depth, double step, double dist,
               double budget, std::vector<double>& acc, Leaf&& leaf) {
  if (dist > budget + 1e-12) return;  // costs only grow with depth
  if (depth == rows.size()) {
    leaf(dist, acc);
    return;
  }
  const RowSpec& r = rows[depth];
  for (double t = 0.0;; t += step) {
    if (t > 1.0) t = 1.0;
    double row_dist = (1.0 - t) * r.cost0 + t * r.cost1;
    for (std::size_t k = 0; k < acc.size(); ++k)
      acc[k] += (1.0 - t) * r.add0[k] + t * r.add1[k];
    scan_rows(rows, depth + 1, step, dist + row_dist, budget, acc, leaf);
    for (std::size_t k = 0; k < acc.size(); ++k)
      acc[k] -= (1.0 - t) * r.add0[k] + t * r.add1[k];
    if (t >= 1.0) break;
  }
}

}  // namespace detail

/// Exhaustive grid minimum of the pre-processing discrimination at budget D.
/// Covers both fairness criteria under the global distortion mode.
inline OracleResult brute_force_disc(const PreProblem& prob, double D, double step) {
  prob.validate();
  if (!(step > 0.0 && step <= 0.1)) throw InvalidInput("step must lie in (0, 0.1]");
  if (prob.distortion_mode != DistortionMode::kGlobal)
    throw InvalidInput("oracle covers the global distortion mode only");
  const std::size_t nx = prob.joint.nx(), ny = prob.joint.ny();
  std::size_t rows = (prob.use_a ? 2 : 1) * nx;
  if (rows * (nx - 1) > 4) throw TooLarge("more than 4 free channel parameters");

  const auto& joint = prob.joint;
  const bool parity = prob.criterion == Criterion::kDemographicParity;
  // acc layout: (a, y, yhat) flattened, or (a, yhat) under demographic
  // parity; undefined cells stay zero and are skipped by the leaf.
  const std::size_t slice = parity ? ny : ny * ny;
  std::vector<detail::RowSpec> specs;
  double lipschitz = 0.0;
  for (std::size_t a0 = 0; a0 < (prob.use_a ? 2u : 1u); ++a0)
    for (std::size_t x = 0; x < nx; ++x) {
      detail::RowSpec r;
      r.add0.assign(kNumGroups * slice, 0.0);
      r.add1.assign(kNumGroups * slice, 0.0);
      double lip = 0.0;
      for (std::size_t a = 0; a < kNumGroups; ++a) {
        if (prob.use_a && a != a0) continue;
        r.cost0 += detail::pre_distortion_coef(prob, a, x, 0);
        r.cost1 += detail::pre_distortion_coef(prob, a, x, 1);
        double spread = 0.0;
        for (std::size_t yh = 0; yh < ny; ++yh) spread += std::abs(prob.w(1, yh) - prob.w(0, yh));
        if (parity) {
          if (joint.p_a(a) <= 0.0) continue;
          double px = joint.p_x_given_a(x, a);
          for (std::size_t yh = 0; yh < ny; ++yh) {
            r.add0[a * ny + yh] += px * prob.w(0, yh);
            r.add1[a * ny + yh] += px * prob.w(1, yh);
          }
          lip += px * spread;
        } else {
          for (std::size_t y = 0; y < ny; ++y) {
            if (joint.p_ya(y, a) <= 0.0) continue;
            double px = joint.p_x_given_ya(x, y, a);
            for (std::size_t yh = 0; yh < ny; ++yh) {
              r.add0[(a * ny + y) * ny + yh] += px * prob.w(0, yh);
              r.add1[(a * ny + y) * ny + yh] += px * prob.w(1, yh);
            }
            lip += joint.p_y(y) * px * spread;
          }
        }
      }
      lipschitz += lip;
      specs.push_back(std::move(r));
    }

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> acc(kNumGroups * slice, 0.0);
  detail::scan_rows(specs, 0, step, 0.0, D, acc, [&](double, const std::vector<double>& v) {
    double disc = 0.0;
    if (parity) {
      if (joint.p_a(0) > 0.0 && joint.p_a(1) > 0.0)
        for (std::size_t yh = 0; yh < ny; ++yh) disc += std::abs(v[yh] - v[ny + yh]);
    } else {
      for (std::size_t y = 0; y < ny; ++y) {
        if (joint.p_ya(y, 0) <= 0.0 || joint.p_ya(y, 1) <= 0.0) continue;
        double s = 0.0;
        for (std::size_t yh = 0; yh < ny; ++yh)
          s += std::abs(v[y * ny + yh] - v[(ny + y) * ny + yh]);
        disc += joint.p_y(y) * s;
      }
    }
    if (disc < best) best = disc;
  });
  if (!std::isfinite(best))
    throw InfeasibleBudget("no grid point satisfies the budget", d_min_pre(prob).value);
  return OracleResult{best, lipschitz};
}

/// Exhaustive grid minimum of the post-processing discrimination at budget D.
inline OracleResult brute_force_disc(const PostProblem& prob, double D, double step) {
  prob.validate();
  if (!(step > 0.0 && step <= 0.1)) throw InvalidInput("step must lie in (0, 0.1]");
  const std::size_t ny = prob.pred.ny();
  if (kNumGroups * ny * (ny - 1) > 4) throw TooLarge("more than 4 free channel parameters");

  const auto& pj = prob.pred;
  const bool parity = prob.criterion == Criterion::kDemographicParity;
  const std::size_t slice = parity ? ny : ny * ny;
  std::vector<detail::RowSpec> specs;
  double lipschitz = 0.0;
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo) {
      detail::RowSpec r;
      r.add0.assign(kNumGroups * slice, 0.0);
      r.add1.assign(kNumGroups * slice, 0.0);
      r.cost0 = detail::post_distortion_coef(prob, a, yo, 0);
      r.cost1 = detail::post_distortion_coef(prob, a, yo, 1);
      double lip = 0.0;
      if (parity) {
        if (pj.p_a(a) > 0.0) {
          double pyo = 0.0;  // P(Yo = yo | A = a)
          for (std::size_t y = 0; y < ny; ++y) pyo += pj.q(yo, y, a);
          pyo /= pj.p_a(a);
          r.add0[a * ny + 0] += pyo;
          r.add1[a * ny + 1] += pyo;
          lip += pyo * 2.0;
        }
      } else {
        for (std::size_t y = 0; y < ny; ++y) {
          if (pj.p_ya(y, a) <= 0.0) continue;
          double pyo = pj.p_yo_given_ya(yo, y, a);
          r.add0[(a * ny + y) * ny + 0] += pyo;
          r.add1[(a * ny + y) * ny + 1] += pyo;
          lip += pj.p_y(y) * pyo * 2.0;
        }
      }
      lipschitz += lip;
      specs.push_back(std::move(r));
    }

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> acc(kNumGroups * slice, 0.0);
  detail::scan_rows(specs, 0, step, 0.0, D, acc, [&](double, const std::vector<double>& v) {
    double disc = 0.0;
    if (parity) {
      if (pj.p_a(0) > 0.0 && pj.p_a(1) > 0.0)
        for (std::size_t yh = 0; yh < ny; ++yh) disc += std::abs(v[yh] - v[ny + yh]);
    } else {
      for (std::size_t y = 0; y < ny; ++y) {
        if (pj.p_ya(y, 0) <= 0.0 || pj.p_ya(y, 1) <= 0.0) continue;
        double s = 0.0;
        for (std::size_t yh = 0; yh < ny; ++yh)
          s += std::abs(v[y * ny + yh] - v[(ny + y) * ny + yh]);
        disc += pj.p_y(y) * s;
      }
    }
    if (disc < best) best = disc;
  });
  if (!std::isfinite(best))
    throw InfeasibleBudget("no grid point satisfies the budget", d_min_post(prob).value);
  return OracleResult{best, lipschitz};
}

}  // namespace fairlp
