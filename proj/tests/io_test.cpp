#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>

#include "json.hpp"
#include "kflow/error.hpp"
#include "kflow/io.hpp"

using namespace kflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"({
  "m": 1, "k": 2, "grid": 64, "dt": 0.001, "t_end": 0.5,
  "initial": {"type": "circle", "r": 1.5}
})";

ErrorCode code_of(auto&& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "no kflow::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Lcg, MmixRecurrence) {
  Lcg64 rng(1);
  EXPECT_EQ(rng.next_u64(), 7806831264735756412ULL);
  Lcg64 a(42);
  std::uint64_t x = 42;
  for (int i = 0; i < 5; ++i) {
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    EXPECT_EQ(a.next_unit(), static_cast<double>(x >> 11) / 9007199254740992.0);
  }
}

TEST(Config, MinimalDefaults) {
  const auto cfg = parse_config(kMinimalConfig);
  EXPECT_EQ(cfg.m, 1);
  EXPECT_EQ(cfg.params.k, 2);
  EXPECT_EQ(cfg.params.grid, 64u);
  EXPECT_EQ(cfg.params.solver, SolverKind::Spectral);
  EXPECT_EQ(std::get<CircleSpec>(cfg.initial).r, 1.5);
  EXPECT_EQ(cfg.output.dir, "kflow_out");
}

TEST(Config, RoundTripsEveryInitialKind) {
  RunConfig cfg;
  cfg.m = 2;
  cfg.params.k = 3;
  cfg.params.grid = 264;
  cfg.params.solver = SolverKind::FiniteDifference;
  cfg.params.dt = 1.0 / 3.0 * 1e-4;
  cfg.params.t_end = 0.7;
  cfg.params.snapshot_interval = 0.1;
  cfg.params.series_interval = 0.01;
  cfg.params.convexity_guard = 1e-3;
  cfg.tolerances.width = 1e-9;
  cfg.params.width_tolerance = 1e-9;
  cfg.output.dir = "out/x";
  for (const InitialSpec& spec :
       {InitialSpec{CircleSpec{0.3}}, InitialSpec{FourierSpec{4.0, {{1, 0.1, -0.2}, {3, 0.0, 0.01}}}},
        InitialSpec{KSymmetricRandomSpec{7, 9, 0.05, 2.0}}, InitialSpec{PerturbedCircleSpec{1.0, 3, 0.01}}}) {
    cfg.initial = spec;
    EXPECT_EQ(parse_config(write_config(cfg)), cfg);
  }
}

TEST(Config, ErrorsNameTheProblem) {
  std::string msg;
  EXPECT_EQ(code_of([] { parse_config("{\n  \"m\": 1,\n  \"k\": \n}"); }, &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;

  EXPECT_EQ(code_of([] { parse_config(R"({"m": 1, "grid": 64, "dt": 0.1, "t_end": 1,
                                          "initial": {"type": "circle", "r": 1}})"); },
                    &msg),
            ErrorCode::ConfigError);
  EXPECT_NE(msg.find("k"), std::string::npos) << msg;

  EXPECT_EQ(code_of([] { parse_config(R"({"m": 1, "k": 2, "grid": 64, "dt": 0.1, "t_end": 1,
                                          "initial": {"type": "ellipse"}})"); },
                    &msg),
            ErrorCode::ConfigError);
  EXPECT_NE(msg.find("initial"), std::string::npos) << msg;

  EXPECT_EQ(code_of([] { parse_config(R"({"m": 1, "k": 2, "grid": 64, "dt": 0.1, "t_end": 1, "solver": "euler",
                                          "initial": {"type": "circle", "r": 1}})"); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config(R"({"m": "one", "k": 2, "grid": 64, "dt": 0.1, "t_end": 1,
                                          "initial": {"type": "circle", "r": 1}})"); }),
            ErrorCode::ConfigError);
}

TEST(Config, LoadMissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_config("/nonexistent/kflow.json"); }), ErrorCode::IoError);
}

TEST(Initial, PerturbedCircleOutOfRangeIsRejected) {
  std::string msg;
  EXPECT_EQ(code_of([] { generate_initial(PerturbedCircleSpec{1.0, 2, 0.5}, 1, 64, 2); }, &msg),
            ErrorCode::ConfigError);
  EXPECT_NE(msg.find("min rho"), std::string::npos) << msg;
  const auto p = generate_initial(PerturbedCircleSpec{1.0, 2, 0.05}, 1, 64, 2);
  EXPECT_NEAR(p[0], 1.05, 1e-15);
}

TEST(Initial, KSymmetricRandomIsSymmetricAndDeterministic) {
  const KSymmetricRandomSpec spec{7, 12, 0.05, 1.0};
  const auto p = generate_initial(spec, 1, 264, 3);
  EXPECT_LT(symmetry_defect(p, 3), 1e-12);
  EXPECT_GE(is_locally_convex(p).min_rho, 0.1);
  EXPECT_EQ(p, generate_initial(spec, 1, 264, 3));
  const auto f = analyze(p, 20);
  for (const auto& md : f.modes) {
    if (md.n % 3 != 0) {
      EXPECT_LT(std::hypot(md.a, md.b), 1e-15);
    }
  }
  EXPECT_NE(p, generate_initial(KSymmetricRandomSpec{8, 12, 0.05, 1.0}, 1, 264, 3));
}

TEST(Initial, FourierModeMustFitGrid) {
  EXPECT_EQ(code_of([] { generate_initial(FourierSpec{2.0, {{40, 0.01, 0.0}}}, 1, 64, 2); }), ErrorCode::ConfigError);
}

TEST(Snapshot, BitExactRoundTrip) {
  const auto p = SupportSamples::sample(3, 48, [](double t) { return 2.0 + 0.1 * std::sin(t / 3) + 1e-17 * t; });
  const Snapshot s{0.123456789012345678, p};
  const auto text = write_snapshot(s);
  EXPECT_EQ(text.rfind("# m=3 t=", 0), 0u);
  const auto back = parse_snapshot(text);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(back.p, p);
}

TEST(Snapshot, ParseErrorsGiveLine) {
  std::string msg;
  EXPECT_EQ(code_of([] { parse_snapshot("# m=1 t=0 G=16\ntheta,p\n0,1\n0.3,abc\n"); }, &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_EQ(code_of([] { parse_snapshot("theta,p\n0,1\n"); }), ErrorCode::ParseError);
}

TEST(Series, HeaderAndRows) {
  FlowParams params;
  params.grid = 64;
  params.t_end = 0.1;
  params.series_interval = 0.02;
  params.width_tolerance = 0.0;
  const auto traj = run_flow(params, generate_initial(PerturbedCircleSpec{1.0, 2, 0.05}, 1, 64, 2));
  const auto csv = write_series_csv(traj.series);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kSeriesColumns);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
  }
  EXPECT_EQ(rows, traj.series.size());
  EXPECT_EQ(rows, 6u);
}

TEST(Report, JsonCarriesInfiniteMargin) {
  RunConfig cfg = parse_config(kMinimalConfig);
  const auto traj = run_flow(cfg.params, generate_initial(cfg.initial, cfg.m, cfg.params.grid, cfg.params.k));
  const auto report = build_report(traj, cfg.tolerances);
  const auto doc = nlohmann::json::parse(write_report_json(report, cfg, traj));
  EXPECT_EQ(doc.at("gradient_bound_margin"), "inf");
  EXPECT_EQ(doc.at("classification"), "circle_limit");
  EXPECT_DOUBLE_EQ(doc.at("final_radius").get<double>(), 1.5);
}

TEST(Svg, ViewBoxPaddingAndClosure) {
  const auto svg = render_svg(reconstruct_curve(SupportSamples::constant(1, 64, 1.0)));
  const auto vb = svg.find("viewBox=\"");
  ASSERT_NE(vb, std::string::npos);
  std::istringstream nums(svg.substr(vb + 9));
  double x, y, w, h;
  nums >> x >> y >> w >> h;
  EXPECT_NEAR(x, -1.1, 1e-12);
  EXPECT_NEAR(y, -1.1, 1e-12);
  EXPECT_NEAR(w, 2.2, 1e-12);
  EXPECT_NEAR(h, 2.2, 1e-12);
  const auto sw = svg.find("stroke-width=\"");
  ASSERT_NE(sw, std::string::npos);
  EXPECT_NEAR(std::stod(svg.substr(sw + 14)), 0.01, 1e-14);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), ','), 65);
}

TEST(Files, WriteIntoMissingDirectoryFails) {
  EXPECT_EQ(code_of([] { write_text_file("/nonexistent/dir/x.txt", "x"); }), ErrorCode::IoError);
  const auto path = fs::temp_directory_path() / "kflow_io_test.txt";
  write_text_file(path, "hello\n");
  EXPECT_EQ(read_text_file(path), "hello\n");
  fs::remove(path);
}
