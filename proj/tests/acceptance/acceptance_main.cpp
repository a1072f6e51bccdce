// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Desk scale throughout (binary A and Y, |X| <= 6).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fairlp/fairlp.hpp"

#include "../test_util.hpp"

using namespace fairlp;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

PreProblem random_pre(std::mt19937_64& rng, bool use_a) {
  return PreProblem{testutil::random_joint(rng, 2, 2), testutil::random_channel(rng, 2, 2),
                    DistortionMatrix::zero_one(2), use_a};
}

// C1: LP vs brute-force grid oracle on seeded 2x2x2 instances, both use_a
// settings and the post side, within runtime budget.
void criterion1() {
  auto start = std::chrono::steady_clock::now();
  double worst_gap = 0.0;
  bool sound = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = testutil::make_rng(seed);
    auto joint = testutil::random_joint(rng, 2, 2);
    auto w = testutil::random_channel(rng, 2, 2);
    for (bool use_a : {true, false}) {
      PreProblem prob{joint, w, DistortionMatrix::zero_one(2), use_a};
      double D = 0.5 * (d_min_pre(prob).value + d_max_bound_pre(prob));
      double lp = disc_pre(prob, D).disc;
      double oracle = brute_force_disc(prob, D, 0.02).value;
      sound = sound && lp <= oracle + 1e-9 && std::abs(lp - oracle) <= 2e-2;
      worst_gap = std::max(worst_gap, std::abs(lp - oracle));
    }
    PostProblem post{derive_pred_joint(w, joint), DistortionMatrix::zero_one(2)};
    double D = 0.5 * (d_min_post(post).value + d_max_bound_post(post));
    double lp = disc_post(post, D).disc;
    double oracle = brute_force_disc(post, D, 0.01).value;
    sound = sound && lp <= oracle + 1e-9 && std::abs(lp - oracle) <= 2e-2;
    worst_gap = std::max(worst_gap, std::abs(lp - oracle));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, "oracle equivalence", sound && secs <= 60.0,
         "worst |LP - oracle| = " + fmt(worst_gap) + " (budget 2e-2), " + fmt(secs) + " s");
}

// C2: closed forms vs the LP feasibility boundary, and the D_max bounds.
void criterion2() {
  bool ok = true;
  double worst_boundary = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = testutil::make_rng(seed);
    auto joint = testutil::random_joint(rng, 2, 2);
    auto w = testutil::random_channel(rng, 2, 2);
    PreProblem prob{joint, w, DistortionMatrix::zero_one(2), true};
    double dmin = d_min_pre(prob).value;
    double lo = 0.0, hi = d_max_bound_pre(prob);
    while (hi - lo > 1e-8) {
      double mid = 0.5 * (lo + hi);
      (feasible(build_pre_lp(prob, mid)) ? hi : lo) = mid;
    }
    worst_boundary = std::max(worst_boundary, std::abs(hi - dmin));
    ok = ok && std::abs(hi - dmin) <= 1e-6;
    ok = ok && disc_pre(prob, d_max_bound_pre(prob)).disc <= 1e-9;
    ok = ok && d_max_exact(prob) <= d_max_bound_pre(prob) + 1e-12;

    PostProblem post{derive_pred_joint(w, joint), DistortionMatrix::zero_one(2)};
    double dminq = d_min_post(post).value;
    lo = 0.0;
    hi = d_max_bound_post(post);
    while (hi - lo > 1e-8) {
      double mid = 0.5 * (lo + hi);
      (feasible(build_post_lp(post, mid)) ? hi : lo) = mid;
    }
    worst_boundary = std::max(worst_boundary, std::abs(hi - dminq));
    ok = ok && std::abs(hi - dminq) <= 1e-6;
    ok = ok && disc_post(post, d_max_bound_post(post)).disc <= 1e-9;
    ok = ok && d_max_exact_post(post) <= d_max_bound_post(post) + 1e-12;
  }
  report(2, "closed-form bounds", ok,
         "worst |bisected boundary - d_min| = " + fmt(worst_boundary) + " (tol 1e-6)");
}

// C3: every generated curve is non-increasing, convex, and chord-linear
// between basis breakpoints.
void criterion3() {
  bool ok = true;
  double worst_chord = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rng = testutil::make_rng(seed);
    auto joint = testutil::random_joint(rng, 2, 2);
    auto w = testutil::random_channel(rng, 2, 2);
    for (int side = 0; side < 3; ++side) {
      PreProblem pre{joint, w, DistortionMatrix::zero_one(2), side == 0};
      PostProblem post{derive_pred_joint(w, joint), DistortionMatrix::zero_one(2)};
      TradeoffCurve curve = (side < 2) ? tradeoff_curve(pre, GridSpec{{}, 33})
                                       : tradeoff_curve_post(post, GridSpec{{}, 33});
      ok = ok && curve.checks.nonincreasing && curve.checks.convex;
      auto disc_at = [&](double D) {
        return (side < 2) ? disc_pre(pre, D).disc : disc_post(post, D).disc;
      };
      std::vector<double> bounds{curve.d_min};
      for (double b : curve.breakpoints) bounds.push_back(b);
      bounds.push_back(curve.points.back().budget);
      for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
        double lo = bounds[s] + 2e-6, hi = bounds[s + 1] - 2e-6;
        if (hi - lo < 1e-4) continue;
        double gap = std::abs(disc_at(0.5 * (lo + hi)) - 0.5 * (disc_at(lo) + disc_at(hi)));
        worst_chord = std::max(worst_chord, gap);
        ok = ok && gap <= 1e-7;
      }
    }
  }
  report(3, "curve structure", ok, "worst chord deviation = " + fmt(worst_chord) + " (tol 1e-7)");
}

// C4: group-aware pre-processing dominates the group-blind variant.
void criterion4() {
  bool ok = true;
  double worst = -1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = testutil::make_rng(seed);
    auto aware = random_pre(rng, true);
    PreProblem blind = aware;
    blind.use_a = false;
    double lo = d_min_pre(blind).value;
    double hi = d_max_bound_pre(aware);
    for (int i = 0; i <= 20; ++i) {
      double D = lo + (hi - lo) * i / 20.0;
      double diff = disc_pre(aware, D).disc - disc_pre(blind, D).disc;
      worst = std::max(worst, diff);
      ok = ok && diff <= 1e-9;
    }
  }
  report(4, "group-aware dominance", ok, "max disc(aware) - disc(blind) = " + fmt(worst));
}

// C5: substitution construction reproduces the post-processed conditional.
void criterion5() {
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = testutil::make_rng(seed ^ 0x5050);
    auto joint = testutil::random_joint(rng, 4, 2);
    Matrix wk(4, 2);
    for (std::size_t x = 0; x < 4; ++x) {
      double v = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
      wk(x, 1) = v;
      wk(x, 0) = 1.0 - v;
    }
    wk(0, 1) = 0.0;
    wk(0, 0) = 1.0;
    wk(3, 1) = 1.0;
    wk(3, 0) = 0.0;
    Channel w(std::move(wk));
    auto wit = check_substitution(w);
    if (!wit) {
      ok = false;
      continue;
    }
    auto pj = derive_pred_joint(w, joint);
    for (int k = 0; k < 5; ++k) {
      GroupChannels post{{testutil::random_channel(rng, 2, 2),
                          testutil::random_channel(rng, 2, 2)}};
      auto pre = substitute_post_with_pre(post, w, joint, wit->first, wit->second);
      auto cp = induced_prediction_channel(pre, w, joint);
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t y = 0; y < 2; ++y)
          for (std::size_t yp = 0; yp < 2; ++yp) {
            double post_cond = 0.0;
            for (std::size_t yo = 0; yo < 2; ++yo)
              post_cond += post[a](yo, yp) * pj.p_yo_given_ya(yo, y, a);
            worst = std::max(worst, std::abs(post_cond - cp.slice[a](y, yp)));
          }
    }
  }
  ok = ok && worst <= 1e-9;
  report(5, "substitution fidelity", ok, "max entrywise deviation = " + fmt(worst) + " (tol 1e-9)");
}

// C6: the paired dominance inequalities on >= 100 gated instances. The budget
// half holds on all of them; the discrimination half is asserted as required
// even though it fails on a large fraction of gated instances, because at the
// minimal pre budget the only feasible channel is the polarizing
// deterministic one, whose discrimination routinely exceeds the original
// classifier's. See the dominance discussion in the README.
void criterion6() {
  auto rng = testutil::make_rng(2026);
  int gated = 0, dmin_ok = 0, disc_ok = 0;
  while (gated < 100) {
    auto inst = testutil::dominance_candidate(rng, 3 + gated % 3);
    auto pj = derive_pred_joint(inst.w, inst.joint);
    if (!is_proper(pj)) continue;
    std::optional<DominanceWitness> wit;
    try {
      wit = dominance_condition(inst.joint, inst.w);
    } catch (const ConventionViolated&) {
      continue;
    }
    if (!wit) continue;
    ++gated;
    auto rep = compare_pre_post(inst.joint, inst.w, DistortionMatrix::zero_one(2));
    if (rep.d_min_pre_a < rep.d_min_post - 1e-9) ++dmin_ok;
    if (rep.disc_at_dmin_pre < rep.disc_at_dmin_post - 1e-9) ++disc_ok;
  }
  bool ok = dmin_ok == gated && disc_ok == gated;
  report(6, "dominance at the minimal budgets", ok,
         "d_min clause " + std::to_string(dmin_ok) + "/" + std::to_string(gated) +
             ", disc clause " + std::to_string(disc_ok) + "/" + std::to_string(gated) +
             " (disc clause fails by construction at the minimal budget; see README)");
}

// C7: qualitative scatter reproduction.
void criterion7() {
  auto pts = tv_mi_scatter(10000, 0);
  bool corner = false;
  for (const auto& p : pts) corner = corner || (p.mi < 0.01 && p.tv > 0.3);

  std::vector<double> q(8, 0.0);
  for (std::size_t y = 0; y < 2; ++y) {
    q[(y * 2 + y) * 2 + 0] = 0.5 * 0.999;
    q[((1 - y) * 2 + y) * 2 + 1] = 0.5 * 0.001;
  }
  PredictionJoint pj(2, q);
  double mi = mutual_info_discrimination(pj);
  double tv = tv_discrimination(cond_prediction(pj), pj.y_marginal());
  bool handbuilt = mi < 0.02 && tv > 0.5;
  report(7, "tv/mi decoupling", corner && handbuilt,
         std::string("scatter corner point ") + (corner ? "found" : "missing") +
             ", hand-built instance mi = " + fmt(mi) + ", tv = " + fmt(tv));
}

// C8: the exact-EO distortion equals the limit of the relaxed sweep.
void criterion8() {
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = testutil::make_rng(seed ^ 0x8080);
    auto joint = testutil::random_joint(rng, 3, 2);
    auto w = testutil::random_channel(rng, 3, 2);
    PostProblem post{derive_pred_joint(w, joint), DistortionMatrix::zero_one(2)};
    double eo = exact_eo_post(post).distortion;
    double sweep = d_max_exact_post(post, 1e-9);
    worst = std::max(worst, std::abs(eo - sweep));
    ok = ok && std::abs(eo - sweep) <= 1e-6;
  }
  report(8, "exact-EO consistency", ok, "worst |exact - sweep| = " + fmt(worst) + " (tol 1e-6)");
}

// C9: simplex vs exhaustive basic-feasible-solution enumeration, plus basis
// determinism.
void criterion9() {
  auto rng = testutil::make_rng(0x9999);
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 4 + static_cast<std::size_t>(trial % 6);
    auto lp = testutil::random_feasible_lp(rng, n, trial % 3, 2 + trial % 3);
    LPSolution sol = solve(lp);
    if (sol.status != SolveStatus::kOptimal) {
      ok = false;
      continue;
    }
    auto oracle = testutil::lp_vertex_enumeration_oracle(lp);
    if (!oracle) {
      ok = false;
      continue;
    }
    worst = std::max(worst, std::abs(sol.value - *oracle));
    ok = ok && std::abs(sol.value - *oracle) <= 1e-8;
    ok = ok && solve(lp).basis == sol.basis;
  }
  report(9, "LP solver soundness", ok, "worst |simplex - enumeration| = " + fmt(worst) + " (tol 1e-8)");
}

// C10: a suboptimal deterministic classifier admits a pre-channel cheaper
// than the identity.
void criterion10() {
  std::vector<double> p = {
      0.04, 0.32,  // a=0, x=0: mostly qualified, predicted 0
      0.06, 0.28,  // a=0, x=1
      0.02, 0.12,  // a=1, x=0
      0.04, 0.12,  // a=1, x=1
  };
  JointDistribution joint(2, 2, p);
  Channel w = Channel::deterministic({0, 1}, 2);
  PreProblem prob{joint, w, DistortionMatrix::zero_one(2), true};
  double ident =
      expected_distortion(GroupChannels::tied(Channel::identity(2)), w, joint, prob.d);
  double dmin = d_min_pre(prob).value;
  report(10, "pre-processing below the identity budget", dmin < ident,
         "d_min = " + fmt(dmin) + " < identity distortion = " + fmt(ident));
}

}  // namespace

int main() {
  auto start = std::chrono::steady_clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d/10 criteria passed in %.1f s\n", 10 - failures, secs);
  return failures;
}
