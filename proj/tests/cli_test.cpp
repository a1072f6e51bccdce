#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fairlp/io.hpp"
#include "fairlp/analysis.hpp"
#include "test_util.hpp"

using namespace fairlp;
namespace fs = std::filesystem;

namespace {

#ifndef FAIRLP_CLI_PATH
#error "FAIRLP_CLI_PATH must point at the CLI binary"
#endif

int run_cli(const std::string& args) {
  std::string cmd = std::string(FAIRLP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fairlp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_dataset_all_cells() {
    std::ofstream out(path("data.csv"));
    out << "a,x,y\n";
    for (int a = 0; a < 2; ++a)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) out << a << "," << x << "," << y << "\n";
  }

  void write_counts_all_cells() {
    std::ofstream out(path("counts.csv"));
    out << "a,x,y,count\n";
    for (int a = 0; a < 2; ++a)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) out << a << "," << x << "," << y << ",1\n";
  }

  void write_classifier(double w0 = 0.8, double w1 = 0.3) {
    Matrix k(2, 2);
    k(0, 0) = w0;
    k(0, 1) = 1.0 - w0;
    k(1, 0) = w1;
    k(1, 1) = 1.0 - w1;
    io::write_json_file(path("w.json"), io::channel_to_json(Channel(std::move(k))));
  }

  fs::path dir_;
};

TEST_F(CliDir, EstimateProducesUniformJoint) {
  write_dataset_all_cells();
  ASSERT_EQ(run_cli("estimate --data " + path("data.csv") + " --out " + path("out")), 0);
  auto joint = io::joint_from_json(io::read_json_file(path("out/joint.json")));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) EXPECT_DOUBLE_EQ(joint.p(a, x, y), 0.125);
}

TEST_F(CliDir, EstimateCountsEqualsExpandedRows) {
  write_dataset_all_cells();
  write_counts_all_cells();
  ASSERT_EQ(run_cli("estimate --data " + path("data.csv") + " --out " + path("o1")), 0);
  ASSERT_EQ(run_cli("estimate --counts " + path("counts.csv") + " --out " + path("o2")), 0);
  auto a = io::read_json_file(path("o1/joint.json"));
  auto b = io::read_json_file(path("o2/joint.json"));
  EXPECT_EQ(a["data"], b["data"]);
}

TEST_F(CliDir, EstimateRejectsMalformedCsv) {
  {
    std::ofstream out(path("bad.csv"));
    out << "a,x,y\n0,zero,0\n";
  }
  EXPECT_EQ(run_cli("estimate --data " + path("bad.csv") + " --out " + path("out")), 2);
}

TEST_F(CliDir, PreCurveRunsAndIsByteDeterministic) {
  write_dataset_all_cells();
  write_classifier();
  std::string args = "pre-curve --data " + path("data.csv") + " --classifier " + path("w.json") +
                     " --use-a --grid 7 --out " + path("out");
  ASSERT_EQ(run_cli(args), 0);
  ASSERT_TRUE(fs::exists(path("out/curve.csv")));
  ASSERT_TRUE(fs::exists(path("out/report.json")));
  ASSERT_TRUE(fs::exists(path("out/channels/point_000.json")));
  std::string curve1 = slurp(path("out/curve.csv"));
  std::string report1 = slurp(path("out/report.json"));
  ASSERT_EQ(run_cli(args), 0);
  EXPECT_EQ(slurp(path("out/curve.csv")), curve1);
  EXPECT_EQ(slurp(path("out/report.json")), report1);

  // Parallel solves assemble into the same numbers (only the config echo
  // differs).
  ASSERT_EQ(run_cli(args + "2 --jobs 3"), 0);  // --out out2
  auto strip_comments = [](const std::string& s) {
    std::string out;
    std::stringstream ss(s);
    std::string line;
    while (std::getline(ss, line))
      if (line.empty() || line[0] != '#') out += line + "\n";
    return out;
  };
  EXPECT_EQ(strip_comments(slurp(path("out2/curve.csv"))), strip_comments(curve1));

  auto report = io::read_json_file(path("out/report.json"));
  EXPECT_TRUE(report.contains("d_min"));
  EXPECT_TRUE(report.contains("d_max_exact"));
  EXPECT_TRUE(report.contains("breakpoints"));
  EXPECT_TRUE(report["checks"]["nonincreasing"].get<bool>());
  EXPECT_TRUE(report["checks"]["convex"].get<bool>());

  // Emitted channels round-trip: reloading the first channel file and pushing
  // it through the composition reproduces the reported discrimination.
  auto joint = [&] {
    auto ct = io::load_dataset_csv(path("data.csv"));
    return normalize_counts(ct.counts, ct.nx, ct.ny);
  }();
  auto w = io::channel_from_json(io::read_json_file(path("w.json")));
  auto ch = io::group_channels_from_json(io::read_json_file(path("out/channels/point_000.json")),
                                         kSolverProbTol);
  double re = tv_discrimination(induced_prediction_channel(ch, w, joint), joint.y_marginal());
  EXPECT_NEAR(re, report["points"][0]["disc"].get<double>(), 1e-9);
}

TEST_F(CliDir, PreCurveInfeasibleBudgetExitsThree) {
  write_dataset_all_cells();
  write_classifier();
  EXPECT_EQ(run_cli("pre-curve --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --d-list 0.0001 --out " + path("out")),
            3);
}

TEST_F(CliDir, PreCurveOracleGapInReport) {
  write_dataset_all_cells();
  write_classifier();
  ASSERT_EQ(run_cli("pre-curve --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --use-a --grid 5 --oracle --step 0.02 --out " + path("out")),
            0);
  auto report = io::read_json_file(path("out/report.json"));
  ASSERT_FALSE(report["oracle"].is_null());
  EXPECT_LE(report["oracle"]["max_gap"].get<double>(), 2e-2);
}

TEST_F(CliDir, PostCurveWithDumpLp) {
  write_dataset_all_cells();
  write_classifier();
  ASSERT_EQ(run_cli("post-curve --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --grid 5 --dump-lp --out " + path("out")),
            0);
  ASSERT_TRUE(fs::exists(path("out/lp/point_000.json")));
  auto lp = io::read_json_file(path("out/lp/point_000.json"));
  EXPECT_EQ(lp["num_vars"], 20);
  auto report = io::read_json_file(path("out/report.json"));
  EXPECT_EQ(report["side"], "post");
  EXPECT_TRUE(report.contains("exact_eo_distortion"));
}

TEST_F(CliDir, CompareOnFairInstanceTies) {
  // Uniform joint with a shared classifier: nothing to discriminate.
  write_dataset_all_cells();
  write_classifier();
  ASSERT_EQ(run_cli("compare --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --out " + path("out")),
            0);
  auto rep = io::read_json_file(path("out/compare.json"));
  EXPECT_EQ(rep["dominance_verdict"], "tie");
}

TEST_F(CliDir, CompareExitCodeTracksTheDominanceInequalities) {
  // Find a gated instance; on most of them the witness is present but the
  // paired inequalities do not both hold, which the CLI signals with exit 1.
  auto rng = testutil::make_rng(606);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = testutil::dominance_candidate(rng, 3);
    if (!is_proper(derive_pred_joint(inst.w, inst.joint))) continue;
    std::optional<DominanceWitness> wit;
    try {
      wit = dominance_condition(inst.joint, inst.w);
    } catch (const ConventionViolated&) {
      continue;
    }
    if (!wit) continue;
    auto rep = compare_pre_post(inst.joint, inst.w, DistortionMatrix::zero_one(2));
    int expected = (rep.d_min_pre_a < rep.d_min_post - 1e-9 &&
                    rep.disc_at_dmin_pre < rep.disc_at_dmin_post - 1e-9)
                       ? 0
                       : 1;
    io::write_json_file(path("joint.json"), io::joint_to_json(inst.joint));
    io::write_json_file(path("w.json"), io::channel_to_json(inst.w));
    EXPECT_EQ(run_cli("compare --joint " + path("joint.json") + " --classifier " +
                      path("w.json") + " --out " + path("out")),
              expected);
    auto file = io::read_json_file(path("out/compare.json"));
    EXPECT_FALSE(file["dominance_witness"].is_null());
    return;
  }
  FAIL() << "no gated instance found";
}

TEST_F(CliDir, ScatterWritesSeededCsv) {
  ASSERT_EQ(run_cli("scatter --n 25 --seed 9 --out " + path("out")), 0);
  std::string csv = slurp(path("out/scatter.csv"));
  EXPECT_EQ(csv.rfind("# seed=9", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 25);
  ASSERT_EQ(run_cli("scatter --n 25 --seed 9 --out " + path("out2")), 0);
  // Same seed, same bytes apart from the config echo (identical here too).
  std::string csv2 = slurp(path("out2/scatter.csv"));
  EXPECT_EQ(csv.substr(csv.find('\n')), csv2.substr(csv2.find('\n')));
}

TEST_F(CliDir, SubstituteRoundTrip) {
  write_dataset_all_cells();
  io::write_json_file(path("w.json"),
                      io::channel_to_json(Channel::deterministic({0, 1}, 2)));
  io::write_json_file(path("post.json"),
                      io::group_channels_to_json(GroupChannels::tied(Channel::uniform(2, 2))));
  ASSERT_EQ(run_cli("substitute --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --post-channel " + path("post.json") + " --out " + path("out")),
            0);
  auto rep = io::read_json_file(path("out/substitute_report.json"));
  EXPECT_LE(rep["max_induced_deviation"].get<double>(), 1e-9);
  ASSERT_TRUE(fs::exists(path("out/pre_channel.json")));
}

TEST_F(CliDir, SubstituteUnavailableExitsFour) {
  write_dataset_all_cells();
  write_classifier();  // soft classifier, no 0/1 rows
  io::write_json_file(path("post.json"),
                      io::group_channels_to_json(GroupChannels::tied(Channel::identity(2))));
  EXPECT_EQ(run_cli("substitute --data " + path("data.csv") + " --classifier " + path("w.json") +
                    " --post-channel " + path("post.json") + " --out " + path("out")),
            4);
}

TEST_F(CliDir, InvalidConfigExitsTwo) {
  EXPECT_EQ(run_cli("pre-curve --no-such-flag"), 2);
  EXPECT_EQ(run_cli("estimate --out " + path("out")), 2);  // no input source
}

}  // namespace
