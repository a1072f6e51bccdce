// Command-line front end: dataset ingestion, trade-off curves, pre/post
// comparison, scatter sampling, and post-to-pre substitution.
//
// Exit codes: 0 success, 1 dominance verdict failed its implied inequalities,
// 2 invalid configuration or input, 3 infeasible distortion budget,
// 4 substitution unavailable.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairlp/fairlp.hpp"

namespace fs = std::filesystem;
using namespace fairlp;
using io::json;

namespace {

struct Options {
  std::string data;
  std::string counts;
  std::string joint_file;
  std::string pred_joint_file;
  std::string classifier;
  std::string post_channel;
  std::string criterion = "eo";
  bool use_a = false;
  std::string distortion = "zero-one";
  bool per_x = false;
  std::size_t grid = 33;
  std::vector<double> d_list;
  bool oracle = false;
  double step = 0.02;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t n = 10000;
  std::string out = ".";
  bool dump_lp = false;
};

void add_input_flags(CLI::App* cmd, Options& opt, bool with_classifier) {
  cmd->add_option("--data", opt.data, "dataset CSV with header a,x,y");
  cmd->add_option("--counts", opt.counts, "counts CSV with header a,x,y,count");
  cmd->add_option("--joint", opt.joint_file, "joint distribution JSON");
  if (with_classifier)
    cmd->add_option("--classifier", opt.classifier, "classifier channel JSON");
  cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
}

void add_problem_flags(CLI::App* cmd, Options& opt, bool pre_side) {
  cmd->add_option("--criterion", opt.criterion, "fairness criterion")
      ->check(CLI::IsMember({"eo", "dp"}))
      ->capture_default_str();
  cmd->add_option("--distortion", opt.distortion, "zero-one or a matrix JSON file")
      ->capture_default_str();
  if (pre_side) {
    cmd->add_flag("--use-a", opt.use_a, "let the pre-processor read the protected attribute");
    cmd->add_flag("--per-x", opt.per_x, "per-feature conditional distortion constraint");
  }
  cmd->add_option("--grid", opt.grid, "number of uniform budget grid points")
      ->capture_default_str();
  cmd->add_option("--d-list", opt.d_list, "explicit comma-separated budget list")->delimiter(',');
  cmd->add_flag("--oracle", opt.oracle, "run the brute-force grid oracle");
  cmd->add_option("--step", opt.step, "oracle grid step")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "master seed")->capture_default_str();
  cmd->add_option("--jobs", opt.jobs, "parallel grid solves")->capture_default_str();
  cmd->add_flag("--dump-lp", opt.dump_lp, "dump each grid point's LP as JSON");
}

JointDistribution load_joint(const Options& opt) {
  int sources = !opt.data.empty() + !opt.counts.empty() + !opt.joint_file.empty();
  if (sources != 1)
    throw InvalidInput("provide exactly one of --data, --counts, --joint");
  if (!opt.joint_file.empty()) return io::joint_from_json(io::read_json_file(opt.joint_file));
  io::CountTensor ct =
      opt.data.empty() ? io::load_counts_csv(opt.counts) : io::load_dataset_csv(opt.data);
  return normalize_counts(ct.counts, ct.nx, ct.ny);
}

Channel load_classifier(const Options& opt) {
  if (opt.classifier.empty()) throw InvalidInput("--classifier is required");
  return io::channel_from_json(io::read_json_file(opt.classifier));
}

DistortionMatrix load_distortion(const Options& opt, std::size_t ny) {
  if (opt.distortion == "zero-one") return DistortionMatrix::zero_one(ny);
  return DistortionMatrix(io::matrix_from_json(io::read_json_file(opt.distortion)));
}

json config_json(const Options& opt, const std::string& command) {
  return json{{"command", command},
              {"data", opt.data},
              {"counts", opt.counts},
              {"joint", opt.joint_file},
              {"pred_joint", opt.pred_joint_file},
              {"classifier", opt.classifier},
              {"post_channel", opt.post_channel},
              {"criterion", opt.criterion},
              {"use_a", opt.use_a},
              {"distortion", opt.distortion},
              {"per_x", opt.per_x},
              {"grid", opt.grid},
              {"d_list", opt.d_list},
              {"oracle", opt.oracle},
              {"step", opt.step},
              {"seed", opt.seed},
              {"jobs", opt.jobs},
              {"n", opt.n},
              {"out", opt.out},
              {"dump_lp", opt.dump_lp}};
}

GridSpec grid_spec(const Options& opt) {
  GridSpec g;
  if (!opt.d_list.empty())
    g.explicit_points = opt.d_list;
  else
    g.count = opt.grid;
  if (g.explicit_points.empty() && g.count == 0) throw InvalidInput("empty budget grid");
  return g;
}

void ensure_outdir(const Options& opt) {
  fs::create_directories(opt.out);
  fs::create_directories(fs::path(opt.out) / "channels");
}

std::string out_path(const Options& opt, const std::string& name) {
  return (fs::path(opt.out) / name).string();
}

int cmd_estimate(const Options& opt) {
  if (opt.data.empty() == opt.counts.empty())
    throw InvalidInput("provide exactly one of --data, --counts");
  JointDistribution joint = load_joint(opt);
  fs::create_directories(opt.out);
  json j = io::joint_to_json(joint);
  j["config"] = config_json(opt, "estimate");
  io::write_json_file(out_path(opt, "joint.json"), j);

  std::cout << "alphabets: |A|=2 |X|=" << joint.nx() << " |Y|=" << joint.ny() << "\n";
  std::cout << "P_Y =";
  for (std::size_t y = 0; y < joint.ny(); ++y) std::cout << " " << joint.p_y(y);
  std::cout << "\n";
  if (joint.ny() == 2 && joint.p_a(0) > 0.0 && joint.p_a(1) > 0.0) {
    double gap = std::abs(joint.p_ya(1, 0) / joint.p_a(0) - joint.p_ya(1, 1) / joint.p_a(1));
    std::cout << "base-rate gap |P(Y=1|A=0) - P(Y=1|A=1)| = " << gap << "\n";
  }
  for (std::size_t y : joint.degenerate_y())
    std::cout << "warning: DegenerateMarginal P_Y(" << y << ") = 0\n";
  std::cout << "wrote " << out_path(opt, "joint.json") << "\n";
  return 0;
}

struct CurveArtifacts {
  TradeoffCurve curve;
  std::vector<std::pair<double, double>> breakpoint_discs;
  json oracle_report = nullptr;
};

template <class DiscFn, class OracleFn, class DumpFn>
CurveArtifacts run_curve(const Options& opt, const TradeoffCurve& curve, DiscFn&& disc_at,
                         OracleFn&& oracle_at, DumpFn&& dump_at) {
  CurveArtifacts art;
  art.curve = curve;
  for (double b : art.curve.breakpoints)
    art.breakpoint_discs.emplace_back(b, disc_at(b));

  if (opt.oracle) {
    json pts = json::array();
    double max_gap = 0.0;
    // Every 8th grid point keeps the oracle affordable while still covering
    // the budget range end to end.
    for (std::size_t i = 0; i < art.curve.points.size();
         i += std::max<std::size_t>(1, (art.curve.points.size() - 1) / 4)) {
      const auto& p = art.curve.points[i];
      OracleResult orc = oracle_at(p.budget);
      max_gap = std::max(max_gap, orc.value - p.disc);
      pts.push_back(json{{"D", p.budget},
                         {"lp", p.disc},
                         {"oracle", orc.value},
                         {"lipschitz", orc.lipschitz}});
      if (i + 1 >= art.curve.points.size()) break;
    }
    art.oracle_report = json{{"step", opt.step}, {"max_gap", max_gap}, {"points", pts}};
  }

  if (opt.dump_lp) {
    fs::create_directories(fs::path(opt.out) / "lp");
    for (std::size_t i = 0; i < art.curve.points.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "lp/point_%03zu.json", i);
      io::write_json_file(out_path(opt, name), dump_at(art.curve.points[i].budget));
    }
  }
  return art;
}

json curve_report(const Options& opt, const std::string& side, const CurveArtifacts& art,
                  double d_min, double d_max_bound) {
  const TradeoffCurve& c = art.curve;
  json points = json::array();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "channels/point_%03zu.json", i);
    points.push_back(json{{"D", c.points[i].budget},
                          {"disc", c.points[i].disc},
                          {"channel_file", name},
                          {"basis_size", c.points[i].basis.size()}});
  }
  return json{{"side", side},
              {"config", config_json(opt, side + "-curve")},
              {"d_min", d_min},
              {"d_max_bound", d_max_bound},
              {"d_max_exact", c.d_max},
              {"breakpoints", c.breakpoints},
              {"checks",
               json{{"nonincreasing", c.checks.nonincreasing},
                    {"convex", c.checks.convex},
                    {"worst_increase", c.checks.worst_increase},
                    {"worst_second_difference", c.checks.worst_second_difference}}},
              {"points", points},
              {"oracle", art.oracle_report}};
}

void write_curve_outputs(const Options& opt, const std::string& side, const CurveArtifacts& art,
                         const json& report) {
  ensure_outdir(opt);
  std::string comment = "side=" + side + " config=" + config_json(opt, side + "-curve").dump();
  io::write_text_file(out_path(opt, "curve.csv"),
                      io::curve_to_csv(art.curve, art.breakpoint_discs, comment));
  io::write_json_file(out_path(opt, "report.json"), report);
  for (std::size_t i = 0; i < art.curve.points.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "channels/point_%03zu.json", i);
    io::write_json_file(out_path(opt, name),
                        io::group_channels_to_json(art.curve.points[i].channel));
  }
}

int cmd_pre_curve(const Options& opt) {
  if (opt.oracle && opt.per_x)
    throw InvalidInput("--oracle supports the global distortion mode only");
  JointDistribution joint = load_joint(opt);
  Channel w = load_classifier(opt);
  PreProblem prob{joint, w, load_distortion(opt, joint.ny()), opt.use_a,
                  opt.criterion == "dp" ? Criterion::kDemographicParity
                                        : Criterion::kEqualizedOdds,
                  opt.per_x ? DistortionMode::kPerX : DistortionMode::kGlobal};
  TradeoffCurve curve = tradeoff_curve(prob, grid_spec(opt), opt.jobs);
  CurveArtifacts art = run_curve(
      opt, curve, [&](double D) { return disc_pre(prob, D).disc; },
      [&](double D) { return brute_force_disc(prob, D, opt.step); },
      [&](double D) { return io::lp_to_json(build_pre_lp(prob, D)); });
  json report = curve_report(opt, "pre", art, d_min_pre(prob).value, d_max_bound_pre(prob));
  write_curve_outputs(opt, "pre", art, report);
  std::cout << "pre curve: " << curve.points.size() << " points, "
            << curve.breakpoints.size() << " breakpoints, d_min=" << report["d_min"]
            << " d_max=" << curve.d_max << "\n";
  return 0;
}

int cmd_post_curve(const Options& opt) {
  PredictionJoint pred =
      !opt.pred_joint_file.empty()
          ? io::pred_joint_from_json(io::read_json_file(opt.pred_joint_file))
          : derive_pred_joint(load_classifier(opt), load_joint(opt));
  PostProblem prob{pred, load_distortion(opt, pred.ny()),
                   opt.criterion == "dp" ? Criterion::kDemographicParity
                                         : Criterion::kEqualizedOdds};
  TradeoffCurve curve = tradeoff_curve_post(prob, grid_spec(opt), opt.jobs);
  CurveArtifacts art = run_curve(
      opt, curve, [&](double D) { return disc_post(prob, D).disc; },
      [&](double D) { return brute_force_disc(prob, D, opt.step); },
      [&](double D) { return io::lp_to_json(build_post_lp(prob, D)); });
  json report = curve_report(opt, "post", art, d_min_post(prob).value, d_max_bound_post(prob));
  report["exact_eo_distortion"] = exact_eo_post(prob).distortion;
  write_curve_outputs(opt, "post", art, report);
  std::cout << "post curve: " << curve.points.size() << " points, "
            << curve.breakpoints.size() << " breakpoints, d_min=" << report["d_min"]
            << " d_max=" << curve.d_max << "\n";
  return 0;
}

int cmd_compare(const Options& opt) {
  JointDistribution joint = load_joint(opt);
  Channel w = load_classifier(opt);
  ComparisonReport rep = compare_pre_post(joint, w, load_distortion(opt, joint.ny()));
  fs::create_directories(opt.out);
  json j = io::comparison_to_json(rep);
  j["config"] = config_json(opt, "compare");
  io::write_json_file(out_path(opt, "compare.json"), j);
  std::cout << "verdict: " << to_string(rep.verdict) << "  d_min_pre|A=" << rep.d_min_pre_a
            << " d_min_post=" << rep.d_min_post << " disc@dmin pre=" << rep.disc_at_dmin_pre
            << " post=" << rep.disc_at_dmin_post << "\n";
  if (rep.dominance_witness &&
      !(rep.d_min_pre_a < rep.d_min_post - 1e-9 &&
        rep.disc_at_dmin_pre < rep.disc_at_dmin_post - 1e-9)) {
    std::cout << "dominance witness present but the paired inequalities do not both hold\n";
    return 1;
  }
  return 0;
}

int cmd_scatter(const Options& opt) {
  if (opt.n < 1) throw InvalidInput("--n must be at least 1");
  auto pts = tv_mi_scatter(opt.n, opt.seed);
  fs::create_directories(opt.out);
  io::write_text_file(out_path(opt, "scatter.csv"),
                      io::scatter_to_csv(pts, opt.seed, "config=" +
                                         config_json(opt, "scatter").dump()));
  std::cout << "wrote " << out_path(opt, "scatter.csv") << " (" << pts.size() << " rows)\n";
  return 0;
}

int cmd_substitute(const Options& opt) {
  JointDistribution joint = load_joint(opt);
  Channel w = load_classifier(opt);
  if (opt.post_channel.empty()) throw InvalidInput("--post-channel is required");
  GroupChannels post =
      io::group_channels_from_json(io::read_json_file(opt.post_channel), kSolverProbTol);
  auto wit = check_substitution(w);
  if (!wit)
    throw SubstitutionUnavailable("classifier has no deterministic 0/1 rows (x0, x1)");
  GroupChannels pre = substitute_post_with_pre(post, w, joint, wit->first, wit->second);

  // Fidelity: worst entrywise deviation between the two induced conditionals.
  auto pre_cp = induced_prediction_channel(pre, w, joint, /*require_full_support=*/false);
  PredictionJoint pj = derive_pred_joint(w, joint);
  double worst = 0.0;
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t y = 0; y < joint.ny(); ++y) {
      if (pj.p_ya(y, a) <= 0.0) continue;
      for (std::size_t yp = 0; yp < 2; ++yp) {
        double post_cond = 0.0;
        for (std::size_t yo = 0; yo < 2; ++yo)
          post_cond += post[a](yo, yp) * pj.p_yo_given_ya(yo, y, a);
        worst = std::max(worst, std::abs(post_cond - pre_cp.slice[a](y, yp)));
      }
    }

  fs::create_directories(opt.out);
  io::write_json_file(out_path(opt, "pre_channel.json"), io::group_channels_to_json(pre));
  io::write_json_file(out_path(opt, "substitute_report.json"),
                      json{{"config", config_json(opt, "substitute")},
                           {"x0", wit->first},
                           {"x1", wit->second},
                           {"max_induced_deviation", worst}});
  std::cout << "substitution witnesses x0=" << wit->first << " x1=" << wit->second
            << ", max induced deviation " << worst << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-accuracy trade-off toolkit"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* estimate = app.add_subcommand("estimate", "estimate the joint from a CSV");
  add_input_flags(estimate, opt, /*with_classifier=*/false);

  CLI::App* pre = app.add_subcommand("pre-curve", "pre-processing trade-off curve");
  add_input_flags(pre, opt, true);
  add_problem_flags(pre, opt, /*pre_side=*/true);

  CLI::App* post = app.add_subcommand("post-curve", "post-processing trade-off curve");
  add_input_flags(post, opt, true);
  post->add_option("--pred-joint", opt.pred_joint_file, "prediction joint JSON");
  add_problem_flags(post, opt, /*pre_side=*/false);

  CLI::App* compare = app.add_subcommand("compare", "pre vs post comparison report");
  add_input_flags(compare, opt, true);
  compare->add_option("--distortion", opt.distortion, "zero-one or a matrix JSON file")
      ->capture_default_str();

  CLI::App* scatter = app.add_subcommand("scatter", "tv/mi scatter sampling");
  scatter->add_option("--n", opt.n, "number of samples")->capture_default_str();
  scatter->add_option("--seed", opt.seed, "master seed")->capture_default_str();
  scatter->add_option("--out", opt.out, "output directory")->capture_default_str();

  CLI::App* substitute = app.add_subcommand("substitute", "replace a post-processor with a pre-processor");
  add_input_flags(substitute, opt, true);
  substitute->add_option("--post-channel", opt.post_channel, "post-channel JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(estimate)) return cmd_estimate(opt);
    if (app.got_subcommand(pre)) return cmd_pre_curve(opt);
    if (app.got_subcommand(post)) return cmd_post_curve(opt);
    if (app.got_subcommand(compare)) return cmd_compare(opt);
    if (app.got_subcommand(scatter)) return cmd_scatter(opt);
    if (app.got_subcommand(substitute)) return cmd_substitute(opt);
  } catch (const InfeasibleBudget& e) {
    std::cerr << "error: " << e.what() << " (d_min = " << e.d_min << ")\n";
    return 3;
  } catch (const SubstitutionUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
