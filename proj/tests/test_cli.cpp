#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "radiance/checkpoint.hpp"
#include "radiance/dataset.hpp"
#include "radiance/mlp_field.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = rf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rf_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void synth(const std::string& out, const std::string& seed = "5") {
    const Result r = cli({"synth", "--out", out, "--views", "6", "--holdout-every", "3", "--width", "8",
                          "--height", "6", "--seed", seed});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

std::vector<unsigned char> bytes(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST(CliErrorLine, FormatIsMachineParseable) {
  EXPECT_EQ(rf::cli::error_line("input", "bad value"), "error kind=input message=\"bad value\"");
  EXPECT_EQ(rf::cli::error_line("format", "a \"quoted\"\nline\\"),
            "error kind=format message=\"a \\\"quoted\\\"\\nline\\\\\"");
}

TEST_F(Cli, SynthThenEvalAgainstItselfIsInfinite) {
  synth(path("ds"));
  const Result r = cli({"eval", "--data", path("ds"), "--predictions", path("ds"), "--split", "all"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 1u + 6u + 1u);
  EXPECT_EQ(l[0], "view\tfile\tsplit\tpsnr");
  for (std::size_t i = 1; i < l.size(); ++i) EXPECT_EQ(l[i].substr(l[i].rfind('\t') + 1), "inf") << l[i];
  EXPECT_EQ(l.back().substr(0, 5), "mean\t");
}

TEST_F(Cli, SynthIsReproducible) {
  synth(path("a"));
  synth(path("b"));
  synth(path("c"), "6");
  EXPECT_EQ(bytes(path("a/manifest.json")), bytes(path("b/manifest.json")));
  EXPECT_NE(bytes(path("a/manifest.json")), bytes(path("c/manifest.json")));
  for (const auto& e : fs::directory_iterator(path("a")))
    EXPECT_EQ(bytes(e.path().string()), bytes(path("b/" + e.path().filename().string()))) << e.path();
}

TEST_F(Cli, TrainZeroIterationsWritesInitialParameters) {
  synth(path("ds"));
  const Result r = cli({"train", "--data", path("ds"), "--out", path("m.ckpt"), "--iterations", "0",
                        "--depth", "2", "--width", "16", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const rf::Checkpoint c = rf::read_checkpoint(path("m.ckpt"));
  rf::MlpFieldConfig mc;
  mc.bounds = rf::load_dataset(path("ds")).scene.bounds;
  mc.depth = 2;
  mc.width = 16;
  const rf::MlpField<float> fresh(mc, 9);
  ASSERT_EQ(c.parameters.size(), fresh.parameters().size());
  EXPECT_TRUE(std::equal(c.parameters.begin(), c.parameters.end(), fresh.parameters().begin()));
}

TEST_F(Cli, TrainRenderEvalRoundTripIsReproducible) {
  synth(path("ds"));
  for (const char* name : {"a", "b"}) {
    const std::string ck = path(std::string(name) + ".ckpt");
    const Result r = cli({"train", "--data", path("ds"), "--out", ck, "--backend", "voxel", "--resolution", "6",
                          "--iterations", "5", "--rays", "32", "--samples", "8", "--lr", "0.05", "--seed", "2",
                          "--report", path(std::string(name) + ".jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(bytes(path("a.ckpt")), bytes(path("b.ckpt")));
  EXPECT_EQ(bytes(path("a.jsonl")), bytes(path("b.jsonl")));
  const auto report = bytes(path("a.jsonl"));
  EXPECT_EQ(lines(std::string(report.begin(), report.end())).size(), 5u);

  Result r = cli({"render", "--checkpoint", path("a.ckpt"), "--out", path("v.ppm"), "--eye", "0", "-5", "2",
                  "--samples", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  const rf::Image img = rf::read_ppm(path("v.ppm"));
  EXPECT_EQ(img.width, 8);
  EXPECT_EQ(img.height, 6);

  r = cli({"orbit", "--checkpoint", path("a.ckpt"), "--out-dir", path("orbit"), "--frames", "3", "--samples", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("orbit/frame_0000.ppm")));
  EXPECT_TRUE(fs::exists(path("orbit/frame_0002.ppm")));
  EXPECT_FALSE(fs::exists(path("orbit/frame_0003.ppm")));

  r = cli({"eval", "--data", path("ds"), "--checkpoint", path("a.ckpt"), "--samples", "16", "--baseline"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 1u + 2u + 2u);  // header, 2 test views, mean, baseline
  EXPECT_EQ(l[3].substr(0, 5), "mean\t");
  EXPECT_EQ(l[4].substr(0, 9), "baseline\t");
}

TEST_F(Cli, UnknownFlagPrintsUsageAndFails) {
  synth(path("ds"));
  const Result r = cli({"eval", "--data", path("ds"), "--predictions", path("ds"), "--bogus", "1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  const auto l = lines(r.err);
  ASSERT_FALSE(l.empty());
  EXPECT_EQ(l.back().rfind("error kind=usage message=\"", 0), 0u) << l.back();
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"frobnicate"}).code, 0);
}

TEST_F(Cli, RuntimeErrorsAreOneLine) {
  Result r = cli({"eval", "--data", path("missing"), "--predictions", path("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(lines(r.err).size(), 1u);
  EXPECT_EQ(r.err.rfind("error kind=format message=\"", 0), 0u) << r.err;

  synth(path("ds"));
  fs::create_directories(path("empty"));
  r = cli({"eval", "--data", path("ds"), "--predictions", path("empty")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error kind=io message=\"", 0), 0u) << r.err;

  r = cli({"train", "--data", path("ds"), "--out", path("m.ckpt"), "--iterations", "-3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error kind=input message=\"", 0), 0u) << r.err;

  std::ofstream(path("junk.ckpt")) << "not a checkpoint";
  r = cli({"render", "--checkpoint", path("junk.ckpt"), "--out", path("v.ppm"), "--eye", "0", "-5", "2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error kind=format message=\"", 0), 0u) << r.err;

  r = cli({"eval", "--data", path("ds")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error kind=usage message=\"", 0), 0u) << r.err;
}
