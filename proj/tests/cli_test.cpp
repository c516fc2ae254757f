#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "woodgeom/io.hpp"
#include "woodgeom/report.hpp"
#include "woodgeom/woodgeom.hpp"

namespace wg = woodgeom;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCalibration = std::string(WOODGEOM_DATA_DIR) + "/fisheye_190_poly4.json";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("woodgeom_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name, std::ios::binary) << content;
    return path(name);
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "woodgeom");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return wg::cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  json report(const std::string& out_dir) const {
    std::ifstream is(fs::path(out_dir) / "report.json");
    return json::parse(is);
  }

  std::string boxes() const {
    return write("boxes.jsonl",
                 R"({"frame":0,"class":"car","center":[0,0,10],"size":[4,1.8,1.5],"yaw":0.1,"conf":0.9})"
                 "\n"
                 R"({"frame":0,"class":"car","center":[5,0,20],"size":[4,1.8,1.5],"yaw":-1.0,"conf":0.8})"
                 "\n"
                 R"({"frame":1,"class":"car","center":[-3,0,8],"size":[4.2,1.9,1.6],"yaw":2.0,"conf":0.7})"
                 "\n");
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, Eval3dPerfectPredictions) {
  const auto b = boxes();
  ASSERT_EQ(run({"-o", path("out"), "eval-3d", "--preds", b, "--gts", b}), 0) << err_.str();
  const auto r = report(path("out"));
  EXPECT_EQ(r["command"], "eval-3d");
  EXPECT_EQ(r["results"]["AP"].get<double>(), 1.0);
  EXPECT_EQ(r["results"]["AOS"].get<double>(), 1.0);
  EXPECT_EQ(r["results"]["counts"]["tp"], 3);
  EXPECT_EQ(r["config"]["criterion"], "srt");
  EXPECT_EQ(json::parse(out_.str()), r);

  ASSERT_EQ(run({"-o", path("out2"), "eval-3d", "--preds", b, "--gts", b, "--criterion", "iou3d"}), 0);
  EXPECT_EQ(report(path("out2"))["results"]["AP"].get<double>(), 1.0);
}

TEST_F(CliTest, MissingInputIsIoErrorWithoutOutputs) {
  EXPECT_EQ(run({"-o", path("out"), "undistort", "-c", path("nope.json")}), wg::cli::kExitIo);
  EXPECT_FALSE(fs::exists(path("out")) && !fs::is_empty(path("out")));
  EXPECT_EQ(run({"-o", path("out"), "eval-3d", "--preds", path("nope"), "--gts", path("nope")}), wg::cli::kExitIo);
  EXPECT_FALSE(fs::exists(path("out/report.json")));
}

TEST_F(CliTest, ParseErrorsAreValidationErrors) {
  EXPECT_EQ(run({"-o", path("out"), "eval-vo", "--bogus"}), wg::cli::kExitValidation);
  EXPECT_EQ(run({"eval-vo", "--pred", "a", "--gt", "b"}), wg::cli::kExitValidation);
  EXPECT_EQ(run({"-o", path("out")}), wg::cli::kExitValidation);
  const auto b = boxes();
  EXPECT_EQ(run({"-o", path("out"), "eval-3d", "--preds", b, "--gts", b, "--criterion", "giou"}),
            wg::cli::kExitValidation);
  EXPECT_EQ(run({"-o", path("out"), "eval-3d", "--preds", b, "--gts", b, "--alpha", "0.9"}), wg::cli::kExitValidation);
}

TEST_F(CliTest, BadCalibrationIsValidationError) {
  const auto cal = write("cal.json", R"({"model":"poly4","coeffs":[1,0,0,-1],"cx":10,"cy":10,"width":20,)"
                                     R"("height":20,"fov_deg":180})");
  EXPECT_EQ(run({"-o", path("out"), "fit-models", "-c", cal}), wg::cli::kExitValidation);
  EXPECT_FALSE(fs::exists(path("out/report.json")));
}

TEST_F(CliTest, ConfigFileWithExplicitPrecedence) {
  const auto b = boxes();
  const auto cfg = write("cfg.json", json{{"output", path("from_config")},
                                          {"eval-3d", {{"preds", b}, {"gts", b}, {"threshold", 0.7}, {"wt", 0.5}}}}
                                         .dump());
  ASSERT_EQ(run({"--config", cfg, "eval-3d"}), 0) << err_.str();
  auto r = report(path("from_config"));
  EXPECT_EQ(r["config"]["threshold"].get<double>(), 0.7);
  EXPECT_EQ(r["config"]["srt_weights"]["w_t"].get<double>(), 0.5);

  ASSERT_EQ(run({"--config", cfg, "-o", path("explicit"), "eval-3d", "--threshold", "0.6"}), 0) << err_.str();
  r = report(path("explicit"));
  EXPECT_EQ(r["config"]["threshold"].get<double>(), 0.6);
  EXPECT_EQ(r["config"]["srt_weights"]["w_t"].get<double>(), 0.5);
  EXPECT_FALSE(fs::exists(path("from_config/.report.json.tmp")));
}

TEST_F(CliTest, MissingConfigIsIoError) {
  EXPECT_EQ(run({"--config", path("none.json"), "-o", path("out"), "bench-metric"}), wg::cli::kExitIo);
}

TEST_F(CliTest, BenchIsSeeded) {
  ASSERT_EQ(run({"-o", path("a"), "bench-metric", "--pairs", "10000", "--seed", "7"}), 0) << err_.str();
  ASSERT_EQ(run({"-o", path("b"), "bench-metric", "--pairs", "10000", "--seed", "7"}), 0);
  ASSERT_EQ(run({"-o", path("c"), "bench-metric", "--pairs", "10000"}), 0);
  const auto a = report(path("a")), b = report(path("b")), c = report(path("c"));
  EXPECT_EQ(a["results"], b["results"]);
  EXPECT_EQ(a["config"]["rng"], "mt19937_64");
  EXPECT_EQ(c["config"]["seed"], 42);
  EXPECT_NE(a["results"]["sample_pairs"], c["results"]["sample_pairs"]);
  EXPECT_GT(a["timing"]["srt_ns_per_pair"].get<double>(), 0.0);
  EXPECT_EQ(run({"-o", path("d"), "bench-metric", "--pairs", "100"}), wg::cli::kExitValidation);
}

TEST_F(CliTest, ReportParsesAsEvalReport) {
  const auto b = boxes();
  ASSERT_EQ(run({"-o", path("out"), "eval-3d", "--preds", b, "--gts", b}), 0);
  const auto r = report(path("out")).get<wg::EvalReport>();
  EXPECT_EQ(r.version, wg::kVersion);
  EXPECT_EQ(r.command, "eval-3d");
  EXPECT_TRUE(r.timing.contains("wall_ms"));
  EXPECT_EQ(json(r), report(path("out")));
}

TEST_F(CliTest, ThreadsFromEnvironment) {
  ::setenv("WOODGEOM_THREADS", "3", 1);
  const int rc = run({"-o", path("env"), "undistort", "-c", kCalibration, "--width", "64", "--height", "48",
                      "--focal", "30"});
  ::unsetenv("WOODGEOM_THREADS");
  ASSERT_EQ(rc, 0) << err_.str();
  EXPECT_EQ(report(path("env"))["config"]["threads"], 3);
  ASSERT_EQ(run({"-o", path("flag"), "--threads", "2", "undistort", "-c", kCalibration, "--width", "64", "--height",
                 "48", "--focal", "30"}),
            0);
  EXPECT_EQ(report(path("flag"))["config"]["threads"], 2);
  std::ifstream a(path("env/remap.wsrm"), std::ios::binary), b(path("flag/remap.wsrm"), std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_F(CliTest, FitModelsAndCurveExport) {
  ASSERT_EQ(run({"-o", path("fit"), "fit-models", "-c", kCalibration}), 0) << err_.str();
  const auto r = report(path("fit"));
  EXPECT_TRUE(fs::exists(path("fit/deviations.csv")));
  EXPECT_FALSE(r["warnings"].empty());
  ASSERT_EQ(run({"-o", path("curves"), "curve-export", "-c", kCalibration}), 0) << err_.str();
  std::ifstream is(path("curves/curves.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_NE(line.find("eucm"), std::string::npos);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 121);
}

TEST_F(CliTest, UndistortWithImage) {
  wg::Image<float> img(1280, 966, 1, 128.0f);
  {
    std::ofstream os(path("fish.pgm"), std::ios::binary);
    wg::write_netpbm(os, img);
  }
  ASSERT_EQ(run({"-o", path("u"), "undistort", "-c", kCalibration, "--viewport", "cyl", "--width", "200", "--height",
                 "100", "--focal", "60", "--image", path("fish.pgm")}),
            0)
      << err_.str();
  const auto back = wg::read_netpbm(path("u/undistorted.pgm"));
  EXPECT_EQ(back.width, 200);
  EXPECT_EQ(back.at(100, 50), 128.0f);
  EXPECT_TRUE(fs::exists(path("u/resampling_scale.pfm")));
}

TEST_F(CliTest, ProjectCloudAndEvalDepth) {
  const auto cloud = write("cloud.xyz", "0 0 5\n0.5 0.2 8\n1 0.4 16\n-2 1 3\n");
  ASSERT_EQ(run({"-o", path("p"), "project-cloud", "-c", kCalibration, "--cloud", cloud}), 0) << err_.str();
  EXPECT_EQ(report(path("p"))["results"]["valid_pixels"], 3);
  EXPECT_EQ(report(path("p"))["results"]["occlusion_removed"], 1);
  ASSERT_EQ(run({"-o", path("q"), "project-cloud", "-c", kCalibration, "--cloud", cloud, "--no-occlusion"}), 0);
  EXPECT_EQ(report(path("q"))["results"]["valid_pixels"], 3);

  ASSERT_EQ(run({"-o", path("d"), "eval-depth", "--pred", path("p/depth.pfm"), "--gt", path("p/depth.pfm"),
                 "--pred-mask", path("p/depth_mask.pgm"), "--gt-mask", path("p/depth_mask.pgm")}),
            0)
      << err_.str();
  const auto r = report(path("d"));
  EXPECT_EQ(r["results"]["rmse_m"].get<double>(), 0.0);
  EXPECT_EQ(r["results"]["compared_pixels"], 3);
}

TEST_F(CliTest, TaskEvaluations) {
  const auto b2 = write("b2.jsonl", R"({"frame":0,"class":"person","box":[0,0,10,20],"conf":0.9})"
                                    "\n");
  ASSERT_EQ(run({"-o", path("e2"), "eval-2d", "--preds", b2, "--gts", b2}), 0) << err_.str();
  EXPECT_EQ(report(path("e2"))["results"]["mAP"].get<double>(), 1.0);

  const std::string mask = std::string("P5\n2 2\n255\n") + std::string("\x00\x01\x02\x01", 4);
  const auto gt = write("gt.pgm", mask);
  const auto pred = write("pred.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\x01\x01\x01", 4));
  ASSERT_EQ(run({"-o", path("seg"), "eval-seg", "--pred", pred, "--gt", gt, "--classes", "3"}), 0) << err_.str();
  EXPECT_NEAR(report(path("seg"))["results"]["mIoU"].get<double>(), (1.0 + 2.0 / 3.0 + 0.0) / 3.0, 1e-12);
  EXPECT_EQ(run({"-o", path("seg2"), "eval-seg", "--pred", pred, "--gt", gt, "--classes", "2"}),
            wg::cli::kExitValidation);

  const auto labels = write("l.csv", "1,0,0,1\n0,0,0,0\n");
  const auto preds = write("p.csv", "1,0,1,1\n0,0,0,0\n");
  ASSERT_EQ(run({"-o", path("so"), "eval-soiling", "--labels", labels, "--preds", preds}), 0) << err_.str();
  EXPECT_NEAR(report(path("so"))["results"]["mean_jaccard"].get<double>(), (2.0 / 3.0 + 1.0) / 2.0, 1e-12);

  std::ostringstream tum;
  for (int i = 0; i < 10; ++i) tum << i << ' ' << 0.1 * i << " 0 0 0 0 0 1\n";
  const auto traj = write("t.txt", tum.str());
  ASSERT_EQ(run({"-o", path("vo"), "eval-vo", "--pred", traj, "--gt", traj}), 0) << err_.str();
  EXPECT_EQ(report(path("vo"))["results"]["translation_pct"].get<double>(), 100.0);
}
