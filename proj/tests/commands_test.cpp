#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "kflow/commands.hpp"
#include "kflow/io.hpp"

using namespace kflow;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("kflow_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string config_text(const std::string& initial, const std::string& out_dir = "out",
                        const std::string& solver = "spectral", double dt = 0.001) {
  return R"({"m": 1, "k": 2, "grid": 64, "t_end": 0.3, "snapshot_interval": 0.1, "dt": )" + std::to_string(dt) +
         R"(, "solver": ")" + solver + R"(", "initial": )" + initial + R"(, "output": {"dir": ")" + out_dir + "\"}}";
}

}  // namespace

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_status_for(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_status_for(ErrorCode::ParseError), 2);
  EXPECT_EQ(exit_status_for(ErrorCode::NotConvex), 2);
  EXPECT_EQ(exit_status_for(ErrorCode::ConvexityLost), 3);
  EXPECT_EQ(exit_status_for(ErrorCode::StabilityViolation), 3);
  EXPECT_EQ(exit_status_for(ErrorCode::BracketFailure), 3);
  EXPECT_EQ(exit_status_for(ErrorCode::IoError), 4);
}

TEST(BatchThreads, HonoursEnvironment) {
  ::setenv("KFLOW_THREADS", "3", 1);
  EXPECT_EQ(batch_threads(), 3u);
  ::setenv("KFLOW_THREADS", "zero", 1);
  EXPECT_GE(batch_threads(), 1u);
  ::unsetenv("KFLOW_THREADS");
}

TEST(Simulate, WritesAllOutputs) {
  TempDir dir;
  const auto cfg = dir.path() / "run.json";
  write_text_file(cfg, config_text(R"({"type": "perturbed_circle", "r": 1, "n": 2, "eps": 0.05})"));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(cfg, out, err), 0) << err.str();
  const auto run = dir.path() / "out";
  EXPECT_TRUE(fs::exists(run / "series.csv"));
  EXPECT_TRUE(fs::exists(run / "report.json"));
  EXPECT_TRUE(fs::exists(run / "config.json"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "snapshot_00000.csv"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "snapshot_00003.csv"));
  EXPECT_EQ(load_config(run / "config.json"), load_config(cfg));
  EXPECT_DOUBLE_EQ(load_snapshot(run / "snapshots" / "snapshot_00003.csv").t, 0.3);
}

TEST(Simulate, ExitCodesByFailureClass) {
  TempDir dir;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(dir.path() / "missing.json", out, err), 4);

  write_text_file(dir.path() / "bad.json", "{\"m\": 1,");
  EXPECT_EQ(cmd_simulate(dir.path() / "bad.json", out, err), 2);

  write_text_file(dir.path() / "nonconvex.json",
                  config_text(R"({"type": "perturbed_circle", "r": 1, "n": 2, "eps": 0.5})"));
  EXPECT_EQ(cmd_simulate(dir.path() / "nonconvex.json", out, err), 2);

  write_text_file(dir.path() / "unstable.json",
                  config_text(R"({"type": "circle", "r": 1})", "out", "finite_difference", 0.5));
  err.str("");
  EXPECT_EQ(cmd_simulate(dir.path() / "unstable.json", out, err), 3);
  EXPECT_NE(err.str().find("StabilityViolation"), std::string::npos) << err.str();
}

TEST(Simulate, DirectoryBatch) {
  TempDir dir;
  for (int i = 0; i < 3; ++i) {
    const std::string initial = R"({"type": "circle", "r": )" + std::to_string(1 + i) + "}";
    write_text_file(dir.path() / ("c" + std::to_string(i) + ".json"), config_text(initial, "out" + std::to_string(i)));
  }
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(dir.path(), out, err, 2), 0) << err.str();
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(dir.path() / ("out" + std::to_string(i)) / "report.json"));
  // results are reported in file order
  const auto text = out.str();
  EXPECT_LT(text.find("c0.json"), text.find("c1.json"));
  EXPECT_LT(text.find("c1.json"), text.find("c2.json"));

  TempDir empty;
  EXPECT_EQ(cmd_simulate(empty.path(), out, err), 2);
}

TEST(Analyze, Verdicts) {
  TempDir dir;
  auto run = [&](const SupportSamples& p, int k) {
    const auto path = dir.path() / "s.csv";
    write_text_file(path, write_snapshot({0.0, p}));
    std::ostringstream out, err;
    EXPECT_EQ(cmd_analyze(path, k, out, err), 0) << err.str();
    return out.str();
  };
  EXPECT_NE(run(SupportSamples::constant(2, 64, 1.0), 2).find("verdict          m-fold circle"), std::string::npos);
  const auto cw = SupportSamples::sample(1, 96, [](double t) { return 1.0 + 0.1 * std::cos(2 * t); });
  EXPECT_NE(run(cw, 3).find("constant k-order width, not k-symmetric"), std::string::npos);
  EXPECT_NE(run(cw, 2).find("verdict          neither"), std::string::npos);

  std::ostringstream out, err;
  EXPECT_EQ(cmd_analyze(dir.path() / "missing.csv", 2, out, err), 4);
  write_text_file(dir.path() / "junk.csv", "nonsense\n");
  EXPECT_EQ(cmd_analyze(dir.path() / "junk.csv", 2, out, err), 2);
}

TEST(Render, WritesSvg) {
  TempDir dir;
  write_text_file(dir.path() / "s.csv", write_snapshot({0.0, SupportSamples::constant(1, 32, 1.0)}));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_render(dir.path() / "s.csv", dir.path() / "s.svg", out, err), 0) << err.str();
  EXPECT_NE(read_text_file(dir.path() / "s.svg").find("<polyline"), std::string::npos);
  EXPECT_EQ(cmd_render(dir.path() / "s.csv", dir.path() / "no" / "s.svg", out, err), 4);
}

TEST(Gallery, ConfigsLoadAndSnapshotsParse) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_gallery(dir.path(), out, err), 0) << err.str();
  int configs = 0;
  for (const auto& entry : fs::directory_iterator(dir.path())) {
    if (entry.path().extension() != ".json") continue;
    ++configs;
    const auto cfg = load_config(entry.path());
    const auto stem = entry.path().stem().string();
    const auto snap = load_snapshot(dir.path() / (stem + "_initial.csv"));
    EXPECT_EQ(snap.p, generate_initial(cfg.initial, cfg.m, cfg.params.grid, cfg.params.k)) << stem;
    EXPECT_TRUE(fs::exists(dir.path() / (stem + "_initial.svg")));
  }
  EXPECT_EQ(configs, 8);
}
