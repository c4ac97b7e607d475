#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "sympfold/json_util.hpp"
#include "sympfold/map_expr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sympfold;

namespace {

const fs::path kData = SYMPFOLD_DATA_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sympfold_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string data(const std::string& name) const { return (kData / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }
  static json load(const std::string& p) {
    std::ifstream in(p);
    return json::parse(in);
  }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

const char* kPoint = R"({"ambient_dim": 2, "rect_order": 0, "charts": [{"kind": "point", "at": [0.2, 0.3]}]})";
const char* kOtherPoint = R"({"ambient_dim": 2, "rect_order": 0, "charts": [{"kind": "point", "at": [0.9, -0.4]}]})";
const char* kEmpty = R"({"ambient_dim": 2, "rect_order": 0, "charts": []})";
const char* kFilled = R"({"ambient_dim": 2, "rect_order": 2, "charts": [{"kind": "box", "lo": [0, 0], "hi": [1, 1]}]})";

std::vector<std::string> fold_args(const std::string& set, const std::string& out, const std::string& seed) {
  return {"fold", "--set", set, "--Q", "0,1.2,-0.75,0.75", "--R", "0,1.05,0,1", "--K", "-0.85,0.85,-0.85,0.85",
          "--U", "-1.7,1.7,-1.7,1.7", "--seed", seed, "--cert-samples", "20000", "--symplectic-samples", "2000",
          "--out", out};
}

}  // namespace

TEST(CliExitCodes, Map) {
  EXPECT_EQ(cli::exit_code(ErrorCode::Parse), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::BadAreas), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::InsufficientScales), 3);
  EXPECT_EQ(cli::exit_code(ErrorCode::NoDirectionFound), 4);
  EXPECT_EQ(cli::exit_code(ErrorCode::NoAdmissibleTime), 4);
  EXPECT_EQ(cli::exit_code(ErrorCode::CertificationFailed), 5);
}

TEST_F(Cli, UnknownFlagIsInputError) { EXPECT_EQ(run({"fold", "--bogus"}).code, 2); }

TEST_F(Cli, DimSegmentAndDust) {
  auto r = run({"dim", "--set", data("segment.json"), "--out", path("seg.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(load(path("seg.json"))["estimate"]["slope"].get<double>(), 1.0, 0.05);
  EXPECT_TRUE(fs::exists(path("seg.svg")));
  r = run({"dim", "--set", data("dust.json"), "--out", path("dust.json"), "--csv", path("dust.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(load(path("dust.json"))["estimate"]["slope"].get<double>(), 0.6309, 0.05);
  EXPECT_TRUE(fs::exists(path("dust.csv")));
}

TEST_F(Cli, DimInputErrors) {
  EXPECT_EQ(run({"dim", "--set", write("bad.json", "{oops")}).code, 2);
  EXPECT_EQ(run({"dim", "--set", path("missing.json")}).code, 2);
  EXPECT_EQ(run({"dim", "--set", data("segment.json"), "--scales", "0.1,0.05"}).code, 3);
}

TEST_F(Cli, DisplacePoints) {
  const auto r = run({"displace", "--set-a", write("a.json", kPoint), "--set-b", write("b.json", kOtherPoint),
                      "--t-samples", "100", "--out", path("d.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = load(path("d.json"));
  EXPECT_FALSE(j["certificates"].empty());
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST_F(Cli, DisplaceEmptyIsVacuous) {
  const auto r = run({"displace", "--set-a", write("a.json", kEmpty), "--set-b", write("b.json", kPoint), "--out",
                      path("d.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(load(path("d.json"))["vacuous"].get<bool>());
  EXPECT_EQ(run({"verify", "--report", path("d.json")}).code, 0);
}

TEST_F(Cli, DisplaceDustAgainstItselfAndVerify) {
  const auto r = run({"displace", "--set-a", data("planar_dust.json"), "--set-b", data("planar_dust.json"), "--seed",
                      "7", "--out", path("d.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = load(path("d.json"));
  EXPECT_LT(j["result"]["bad_time_fraction"].get<double>(), 0.05);
  EXPECT_GE(j["certificates"].size(), 10u);
  EXPECT_EQ(run({"verify", "--report", path("d.json"), "--seed", "11"}).code, 0);
}

TEST_F(Cli, DisplaceFilledSquaresFails) {
  // Sample spacing is about 0.07, so only a coarse tolerance sees the overlap.
  const auto sq = write("sq.json", kFilled);
  EXPECT_EQ(run({"displace", "--set-a", sq, "--set-b", sq, "--t-samples", "50", "--a-samples", "200", "--b-samples",
                 "200", "--clearance-tol", "0.2"})
                .code,
            4);
}

TEST_F(Cli, FoldDeterministicAndVerifies) {
  auto r = run(fold_args(data("dust_curve4.json"), path("f1.json"), "7"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(fold_args(data("dust_curve4.json"), path("f2.json"), "7"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("f1.json")), slurp(path("f2.json")));
  for (const char* stage : {"embedded", "sheared", "displaced", "final"})
    EXPECT_TRUE(fs::exists(path(std::string("fold_") + stage + ".svg"))) << stage;
  EXPECT_EQ(run({"verify", "--report", path("f1.json"), "--seed", "99"}).code, 0);
}

TEST_F(Cli, VerifyCatchesTamperedMap) {
  ASSERT_EQ(run(fold_args(data("dust_curve4.json"), path("f.json"), "3")).code, 0);
  auto j = load(path("f.json"));
  const auto map = MapExpr::from_json(j["report"]["map"]);
  Mat m = Mat::Identity(4, 4);
  m(0, 0) = 1.01;  // det != 1
  j["report"]["map"] = MapExpr::compose({MapExpr::affine(m, Vec::Zero(4)), map}).to_json();
  std::ofstream(path("t.json")) << j.dump();
  const auto r = run({"verify", "--report", path("t.json"), "--seed", "2"});
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("symplecticity"), std::string::npos);
  EXPECT_EQ(run({"verify", "--report", path("none.json")}).code, 2);
}

TEST_F(Cli, FoldBadAreas) {
  auto args = fold_args(data("dust_curve4.json"), "", "1");
  args[6] = "0,0.5,0,1";  // |R| = 0.5 < |Q| / 2
  args.pop_back();
  args.pop_back();
  EXPECT_EQ(run(args).code, 2);
}

TEST_F(Cli, SqueezePointsIntoTinyTargets) {
  const auto r = run({"squeeze", "--set", data("points4.json"), "--targets", data("targets_tiny.json"),
                      "--witness-scales", "0.5,0.2,0.1,0.05,0.02", "--cert-samples", "500", "--out", path("s.json"),
                      "--no-svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(load(path("s.json"))["report"]["pass"].get<bool>());
  EXPECT_EQ(run({"verify", "--report", path("s.json"), "--seed", "5"}).code, 0);
}

TEST_F(Cli, SqueezeFilledSquareFails) {
  const auto r = run({"squeeze", "--set", data("square.json"), "--targets", data("targets_square.json"), "--out",
                      path("s.json"), "--no-svg"});
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("negligibility-witness"), std::string::npos);
  EXPECT_NE(r.err.find("cannot be squeezed"), std::string::npos);
  EXPECT_TRUE(load(path("s.json")).contains("error"));
}
