#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fairlp/errors.hpp"
#include "fairlp/matrix.hpp"

namespace fairlp {

inline constexpr double kProbTol = 1e-12;      // stochasticity at construction
inline constexpr double kSolverProbTol = 1e-9; // stochasticity after an LP solve
inline constexpr std::size_t kNumGroups = 2;   // |A| is fixed to 2 throughout

/// Row-stochastic conditional distribution: k(i, j) = P(out = j | in = i).
class Channel {
 public:
  Channel() = default;

  Channel(Matrix k, double tol = kProbTol) : k_(std::move(k)) {
    for (std::size_t i = 0; i < k_.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < k_.cols(); ++j) {
        if (k_(i, j) < -tol || !std::isfinite(k_(i, j)))
          throw InvalidInput("channel entry out of range");
        row += k_(i, j);
      }
      if (std::abs(row - 1.0) > tol)
        throw InvalidInput("channel row " + std::to_string(i) + " does not sum to 1");
    }
  }

  static Channel identity(std::size_t n) { return Channel(Matrix::identity(n)); }

  static Channel uniform(std::size_t n, std::size_t m) {
    return Channel(Matrix(n, m, 1.0 / static_cast<double>(m)));
  }

  /// Point mass per row: row i -> targets[i].
  static Channel deterministic(const std::vector<std::size_t>& targets, std::size_t m) {
    Matrix k(targets.size(), m);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] >= m) throw InvalidInput("deterministic target out of range");
      k(i, targets[i]) = 1.0;
    }
    return Channel(std::move(k));
  }

  /// Builds from an LP solution block: clamps stray negatives (>= -1e-9) and
  /// renormalizes each row exactly.
  static Channel from_solver(Matrix k) {
    for (std::size_t i = 0; i < k.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < k.cols(); ++j) {
        if (k(i, j) < -kSolverProbTol)
          throw NumericalFailure("solver channel entry below -1e-9");
        k(i, j) = std::max(k(i, j), 0.0);
        row += k(i, j);
      }
      if (std::abs(row - 1.0) > kSolverProbTol)
        throw NumericalFailure("solver channel row sum off by more than 1e-9");
      for (std::size_t j = 0; j < k.cols(); ++j) k(i, j) /= row;
    }
    return Channel(std::move(k));
  }

  std::size_t in_size() const { return k_.rows(); }
  std::size_t out_size() const { return k_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return k_(i, j); }
  const Matrix& matrix() const { return k_; }

  bool is_deterministic(double tol = kProbTol) const {
    for (std::size_t i = 0; i < k_.rows(); ++i)
      for (std::size_t j = 0; j < k_.cols(); ++j)
        if (k_(i, j) > tol && k_(i, j) < 1.0 - tol) return false;
    return true;
  }

 private:
  Matrix k_;
};

/// One channel per value of the protected attribute. A group-blind channel is
/// stored tied (both entries equal), so downstream composition never branches.
struct GroupChannels {
  std::array<Channel, kNumGroups> by_group;

  static GroupChannels tied(const Channel& k) { return GroupChannels{{k, k}}; }
  const Channel& operator[](std::size_t a) const { return by_group[a]; }
};

/// Cost of predicting yhat when the truth is y. Zero diagonal, entries >= 0.
class DistortionMatrix {
 public:
  DistortionMatrix() = default;

  explicit DistortionMatrix(Matrix d) : d_(std::move(d)) {
    if (d_.rows() != d_.cols()) throw InvalidInput("distortion matrix must be square");
    for (std::size_t y = 0; y < d_.rows(); ++y) {
      if (d_(y, y) != 0.0) throw InvalidInput("distortion diagonal must be exactly 0");
      for (std::size_t yh = 0; yh < d_.cols(); ++yh)
        if (d_(y, yh) < 0.0 || !std::isfinite(d_(y, yh)))
          throw InvalidInput("distortion entries must be finite and >= 0");
    }
  }

  static DistortionMatrix zero_one(std::size_t ny) {
    Matrix d(ny, ny, 1.0);
    for (std::size_t y = 0; y < ny; ++y) d(y, y) = 0.0;
    return DistortionMatrix(std::move(d));
  }

  std::size_t size() const { return d_.rows(); }
  double operator()(std::size_t y, std::size_t yh) const { return d_(y, yh); }
  const Matrix& matrix() const { return d_; }

 private:
  Matrix d_;
};

/// The auditing distribution P_{A,X,Y} over binary A and finite X, Y.
/// Immutable; marginals are cached at construction.
class JointDistribution {
 public:
  JointDistribution() = default;

  JointDistribution(std::size_t nx, std::size_t ny, std::vector<double> tensor)
      : nx_(nx), ny_(ny), p_(std::move(tensor)) {
    if (nx_ < 2 || ny_ < 2) throw InvalidInput("need |X| >= 2 and |Y| >= 2");
    if (p_.size() != kNumGroups * nx_ * ny_)
      throw InvalidInput("joint tensor size mismatch");
    double total = 0.0;
    for (double v : p_) {
      if (v < 0.0 || !std::isfinite(v)) throw InvalidInput("joint entries must be >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > kProbTol) throw InvalidInput("joint does not sum to 1");
    p_y_.assign(ny_, 0.0);
    p_x_.assign(nx_, 0.0);
    p_a_.assign(kNumGroups, 0.0);
    p_ya_.assign(ny_ * kNumGroups, 0.0);
    p_xa_.assign(nx_ * kNumGroups, 0.0);
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t x = 0; x < nx_; ++x)
        for (std::size_t y = 0; y < ny_; ++y) {
          double v = p(a, x, y);
          p_y_[y] += v;
          p_x_[x] += v;
          p_a_[a] += v;
          p_ya_[y * kNumGroups + a] += v;
          p_xa_[x * kNumGroups + a] += v;
        }
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

  double p(std::size_t a, std::size_t x, std::size_t y) const {
    return p_[(a * nx_ + x) * ny_ + y];
  }
  double p_y(std::size_t y) const { return p_y_[y]; }
  double p_x(std::size_t x) const { return p_x_[x]; }
  double p_a(std::size_t a) const { return p_a_[a]; }
  double p_ya(std::size_t y, std::size_t a) const { return p_ya_[y * kNumGroups + a]; }
  double p_xa(std::size_t x, std::size_t a) const { return p_xa_[x * kNumGroups + a]; }

  const std::vector<double>& y_marginal() const { return p_y_; }

  double p_x_given_ya(std::size_t x, std::size_t y, std::size_t a) const {
    double m = p_ya(y, a);
    if (m <= 0.0) throw DegenerateConditioning("P(Y=" + std::to_string(y) +
                                               ",A=" + std::to_string(a) + ") = 0");
    return p(a, x, y) / m;
  }

  double p_y_given_x(std::size_t y, std::size_t x) const {
    if (p_x_[x] <= 0.0) throw DegenerateConditioning("P(X=" + std::to_string(x) + ") = 0");
    return (p(0, x, y) + p(1, x, y)) / p_x_[x];
  }

  double p_x_given_a(std::size_t x, std::size_t a) const {
    if (p_a_[a] <= 0.0) throw DegenerateConditioning("P(A=" + std::to_string(a) + ") = 0");
    return p_xa(x, a) / p_a_[a];
  }

  /// Y values with zero marginal mass (they carry zero LP objective weight).
  std::vector<std::size_t> degenerate_y() const {
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < ny_; ++y)
      if (p_y_[y] <= 0.0) out.push_back(y);
    return out;
  }

 private:
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<double> p_;
  std::vector<double> p_y_, p_x_, p_a_, p_ya_, p_xa_;
};

/// Empirical plug-in estimate from a count tensor indexed (a, x, y).
inline JointDistribution normalize_counts(const std::vector<long long>& counts,
                                          std::size_t nx, std::size_t ny) {
  if (counts.size() != kNumGroups * nx * ny)
    throw InvalidInput("count tensor size mismatch");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw InvalidInput("negative count");
    total += c;
  }
  if (total == 0) throw EmptyData("all counts are zero");
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  // Exact renormalization guards against accumulated rounding on huge totals.
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  return JointDistribution(nx, ny, std::move(p));
}

/// Joint distribution of (Yhat_O, Y, A) — the post-processing input object.
class PredictionJoint {
 public:
  PredictionJoint() = default;

  PredictionJoint(std::size_t ny, std::vector<double> tensor) : ny_(ny), q_(std::move(tensor)) {
    if (ny_ < 2) throw InvalidInput("need |Y| >= 2");
    if (q_.size() != ny_ * ny_ * kNumGroups) throw InvalidInput("prediction joint size mismatch");
    double total = 0.0;
    for (double v : q_) {
      if (v < -kProbTol || !std::isfinite(v)) throw InvalidInput("prediction joint entries must be >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > kProbTol) throw InvalidInput("prediction joint does not sum to 1");
    p_ya_.assign(ny_ * kNumGroups, 0.0);
    p_y_.assign(ny_, 0.0);
    p_a_.assign(kNumGroups, 0.0);
    for (std::size_t yh = 0; yh < ny_; ++yh)
      for (std::size_t y = 0; y < ny_; ++y)
        for (std::size_t a = 0; a < kNumGroups; ++a) {
          double v = q(yh, y, a);
          p_ya_[y * kNumGroups + a] += v;
          p_y_[y] += v;
          p_a_[a] += v;
        }
  }

  std::size_t ny() const { return ny_; }
  double q(std::size_t yhat, std::size_t y, std::size_t a) const {
    return q_[(yhat * ny_ + y) * kNumGroups + a];
  }
  double p_ya(std::size_t y, std::size_t a) const { return p_ya_[y * kNumGroups + a]; }
  double p_y(std::size_t y) const { return p_y_[y]; }
  double p_a(std::size_t a) const { return p_a_[a]; }
  const std::vector<double>& y_marginal() const { return p_y_; }

  /// P(Yhat_O = yo | Y = y, A = a); throws on zero-mass (y, a).
  double p_yo_given_ya(std::size_t yo, std::size_t y, std::size_t a) const {
    double m = p_ya(y, a);
    if (m <= 0.0) throw DegenerateConditioning("P(Y,A) = 0 in prediction joint");
    return q(yo, y, a) / m;
  }

 private:
  std::size_t ny_ = 0;
  std::vector<double> q_;
  std::vector<double> p_ya_, p_y_, p_a_;
};

/// Conditional prediction P_{Yhat | Y, A}: one row-stochastic slice per group,
/// rows indexed by y. Rows for zero-mass (y, a) cells are marked undefined and
/// contribute zero to every divergence.
struct CondPrediction {
  std::size_t ny = 0;
  std::size_t nyhat = 0;
  std::array<Matrix, kNumGroups> slice;
  std::array<std::vector<bool>, kNumGroups> defined;

  bool row_defined(std::size_t y, std::size_t a) const { return defined[a][y]; }
  double p(std::size_t yhat, std::size_t y, std::size_t a) const { return slice[a](y, yhat); }
};

/// P_{Yhat_O | Y, A} read off a prediction joint.
inline CondPrediction cond_prediction(const PredictionJoint& pj) {
  CondPrediction out;
  out.ny = pj.ny();
  out.nyhat = pj.ny();
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    out.slice[a] = Matrix(out.ny, out.nyhat);
    out.defined[a].assign(out.ny, false);
    for (std::size_t y = 0; y < out.ny; ++y) {
      double m = pj.p_ya(y, a);
      if (m <= 0.0) continue;
      out.defined[a][y] = true;
      for (std::size_t yh = 0; yh < out.nyhat; ++yh)
        out.slice[a](y, yh) = pj.q(yh, y, a) / m;
    }
  }
  return out;
}

/// P_{Yhat_F | Y, A} induced by a pre-processing channel followed by the fixed
/// classifier:  sum over x, xt of W(yhat | xt) * pre_a(xt | x) * P(x | y, a).
/// With `require_full_support` (the default) a zero-mass (y, a) cell raises
/// DegenerateConditioning; otherwise the row is marked undefined.
inline CondPrediction induced_prediction_channel(const GroupChannels& pre, const Channel& w,
                                                 const JointDistribution& joint,
                                                 bool require_full_support = true) {
  const std::size_t nx = joint.nx(), ny = joint.ny(), nyh = w.out_size();
  for (std::size_t a = 0; a < kNumGroups; ++a)
    if (pre[a].in_size() != nx || pre[a].out_size() != nx)
      throw InvalidInput("pre-channel shape mismatch");
  if (w.in_size() != nx) throw InvalidInput("classifier input alphabet mismatch");

  CondPrediction out;
  out.ny = ny;
  out.nyhat = nyh;
  for (std::size_t a = 0; a < kNumGroups; ++a) {
    out.slice[a] = Matrix(ny, nyh);
    out.defined[a].assign(ny, false);
    for (std::size_t y = 0; y < ny; ++y) {
      if (joint.p_ya(y, a) <= 0.0) {
        if (require_full_support)
          throw DegenerateConditioning("P(Y=" + std::to_string(y) + ",A=" +
                                       std::to_string(a) + ") = 0");
        continue;
      }
      out.defined[a][y] = true;
      for (std::size_t x = 0; x < nx; ++x) {
        double px = joint.p_x_given_ya(x, y, a);
        if (px == 0.0) continue;
        for (std::size_t xt = 0; xt < nx; ++xt) {
          double m = pre[a](x, xt) * px;
          if (m == 0.0) continue;
          for (std::size_t yh = 0; yh < nyh; ++yh)
            out.slice[a](y, yh) += w(xt, yh) * m;
        }
      }
    }
  }
  return out;
}

/// Objective-scale discrimination: sum_y P_Y(y) sum_yhat |P(yhat|y,0) - P(yhat|y,1)|.
/// Twice the P_Y-weighted total variation; lives in [0, 2].
inline double tv_discrimination(const CondPrediction& cp, const std::vector<double>& p_y) {
  if (p_y.size() != cp.ny) throw InvalidInput("P_Y length mismatch");
  double total = 0.0;
  for (std::size_t y = 0; y < cp.ny; ++y) {
    if (!cp.row_defined(y, 0) || !cp.row_defined(y, 1)) continue;
    double s = 0.0;
    for (std::size_t yh = 0; yh < cp.nyhat; ++yh)
      s += std::abs(cp.slice[0](y, yh) - cp.slice[1](y, yh));
    total += p_y[y] * s;
  }
  return total;
}

enum class DivergenceKind { kTotalVariation, kKl, kReverseKl };

/// P_Y-averaged f-divergence between the two groups' prediction slices.
/// KL returns +infinity when absolute continuity fails (not an error).
inline double f_divergence_discrimination(const CondPrediction& cp,
                                          const std::vector<double>& p_y,
                                          DivergenceKind kind) {
  if (p_y.size() != cp.ny) throw InvalidInput("P_Y length mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t y = 0; y < cp.ny; ++y) {
    if (!cp.row_defined(y, 0) || !cp.row_defined(y, 1)) continue;
    double acc = 0.0;
    for (std::size_t yh = 0; yh < cp.nyhat; ++yh) {
      double p0 = cp.slice[0](y, yh), p1 = cp.slice[1](y, yh);
      switch (kind) {
        case DivergenceKind::kTotalVariation:
          acc += 0.5 * std::abs(p0 - p1);
          break;
        case DivergenceKind::kKl:
          if (p0 > 0.0) acc = (p1 > 0.0) ? acc + p0 * std::log(p0 / p1) : inf;
          break;
        case DivergenceKind::kReverseKl:
          if (p1 > 0.0) acc = (p0 > 0.0) ? acc + p1 * std::log(p1 / p0) : inf;
          break;
      }
      if (acc == inf) break;
    }
    total += p_y[y] * acc;
    if (total == inf) return inf;
  }
  return total;
}

/// Conditional mutual information I(A; Yhat | Y) in nats, via the KL
/// factorization over the group-conditional slices. 0 log(0/0) := 0.
inline double mutual_info_discrimination(const PredictionJoint& pj) {
  const std::size_t ny = pj.ny();
  double total = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    double py = pj.p_y(y);
    if (py <= 0.0) continue;
    for (std::size_t a = 0; a < kNumGroups; ++a) {
      double pya = pj.p_ya(y, a);
      if (pya <= 0.0) continue;
      for (std::size_t yh = 0; yh < ny; ++yh) {
        double joint_slice = pj.q(yh, y, a) / pya;           // P(yhat | y, a)
        double mix = (pj.q(yh, y, 0) + pj.q(yh, y, 1)) / py; // P(yhat | y)
        if (joint_slice > 0.0 && mix > 0.0)
          total += pya * joint_slice * std::log(joint_slice / mix);
      }
    }
  }
  return std::max(total, 0.0);
}

/// Distortion of the pair (xt, x) once pushed through the fixed classifier:
/// dbar(xt, x) = sum_{y, yhat} W(yhat | xt) P(y | x) d(y, yhat).
inline double dbar(std::size_t xt, std::size_t x, const Channel& w,
                   const JointDistribution& joint, const DistortionMatrix& d) {
  if (joint.p_x(x) <= 0.0) throw DegenerateConditioning("P(X=" + std::to_string(x) + ") = 0");
  double acc = 0.0;
  for (std::size_t y = 0; y < joint.ny(); ++y) {
    double pyx = joint.p_y_given_x(y, x);
    if (pyx == 0.0) continue;
    for (std::size_t yh = 0; yh < w.out_size(); ++yh)
      acc += w(xt, yh) * pyx * d(y, yh);
  }
  return acc;
}

/// E[d(Y, Yhat_F)] for a pre-processing channel, by direct summation.
inline double expected_distortion(const GroupChannels& pre, const Channel& w,
                                  const JointDistribution& joint, const DistortionMatrix& d) {
  if (d.size() != w.out_size()) throw InvalidInput("distortion/classifier shape mismatch");
  const std::size_t nx = joint.nx(), ny = joint.ny();
  double acc = 0.0;
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t xt = 0; xt < nx; ++xt) {
        double m = pre[a](x, xt);
        if (m == 0.0) continue;
        for (std::size_t y = 0; y < ny; ++y) {
          double pj = joint.p(a, x, y);
          if (pj == 0.0) continue;
          for (std::size_t yh = 0; yh < ny; ++yh) acc += m * w(xt, yh) * pj * d(y, yh);
        }
      }
  return acc;
}

/// E[d(Y, Yhat_P)] for a post-processing channel applied to a prediction joint.
inline double expected_distortion(const GroupChannels& post, const PredictionJoint& pj,
                                  const DistortionMatrix& d) {
  const std::size_t ny = pj.ny();
  if (d.size() != ny) throw InvalidInput("distortion shape mismatch");
  double acc = 0.0;
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t yo = 0; yo < ny; ++yo)
      for (std::size_t yp = 0; yp < ny; ++yp) {
        double m = post[a](yo, yp);
        if (m == 0.0) continue;
        for (std::size_t y = 0; y < ny; ++y) acc += m * pj.q(yo, y, a) * d(y, yp);
      }
  return acc;
}

/// E[d(Y, Yhat_F) | X = x] for every x. Components with P(X = x) = 0 raise
/// DegenerateConditioning. Reduces to the dbar form for group-blind channels.
inline std::vector<double> conditional_expected_distortion(const GroupChannels& pre,
                                                           const Channel& w,
                                                           const JointDistribution& joint,
                                                           const DistortionMatrix& d) {
  const std::size_t nx = joint.nx(), ny = joint.ny();
  std::vector<double> out(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    double px = joint.p_x(x);
    if (px <= 0.0) throw DegenerateConditioning("P(X=" + std::to_string(x) + ") = 0");
    double acc = 0.0;
    for (std::size_t a = 0; a < kNumGroups; ++a)
      for (std::size_t xt = 0; xt < nx; ++xt) {
        double m = pre[a](x, xt);
        if (m == 0.0) continue;
        for (std::size_t y = 0; y < ny; ++y) {
          double pj = joint.p(a, x, y);
          if (pj == 0.0) continue;
          for (std::size_t yh = 0; yh < ny; ++yh) acc += m * w(xt, yh) * pj * d(y, yh);
        }
      }
    out[x] = acc / px;
  }
  return out;
}

/// q(yhat, y, a) = sum_x W(yhat | x) P(a, x, y).
inline PredictionJoint derive_pred_joint(const Channel& w, const JointDistribution& joint) {
  if (w.in_size() != joint.nx() || w.out_size() != joint.ny())
    throw InvalidInput("classifier shape mismatch");
  const std::size_t nx = joint.nx(), ny = joint.ny();
  std::vector<double> q(ny * ny * kNumGroups, 0.0);
  for (std::size_t yh = 0; yh < ny; ++yh)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t a = 0; a < kNumGroups; ++a) {
        double acc = 0.0;
        for (std::size_t x = 0; x < nx; ++x) acc += w(x, yh) * joint.p(a, x, y);
        q[(yh * ny + y) * kNumGroups + a] = acc;
      }
  return PredictionJoint(ny, std::move(q));
}

}  // namespace fairlp
