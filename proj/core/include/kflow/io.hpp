#pragma once

// Run configuration, initial-curve gallery, and the on-disk formats:
//
//   config    JSON document (see README for the schema)
//   snapshot  "# m=<m> t=<t> G=<G>" comment line, "theta,p" header, one row
//             per grid angle; numbers carry 17 significant digits
//   series    CSV with the fixed column set of kSeriesColumns
//   report    JSON rendering of InvariantReport
//   render    SVG with a single closed polyline

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kflow/diagnostics.hpp"
#include "kflow/flow.hpp"
#include "kflow/support_geometry.hpp"

namespace kflow {

struct CircleSpec {
  double r = 1.0;
  bool operator==(const CircleSpec&) const = default;
};

struct FourierSpec {
  double a0 = 2.0;
  std::vector<FourierMode> modes;
  bool operator==(const FourierSpec& o) const;
};

/// Random coefficients on multiples of k only (a k-symmetric curve) around a
/// circle of radius r, drawn from the seeded 64-bit LCG below.
struct KSymmetricRandomSpec {
  std::uint64_t seed = 0;
  int max_mode = 8;
  double amplitude = 0.1;
  double r = 1.0;
  bool operator==(const KSymmetricRandomSpec&) const = default;
};

/// p = r + eps cos(n theta / m).
struct PerturbedCircleSpec {
  double r = 1.0;
  int n = 2;
  double eps = 0.05;
  bool operator==(const PerturbedCircleSpec&) const = default;
};

using InitialSpec = std::variant<CircleSpec, FourierSpec, KSymmetricRandomSpec, PerturbedCircleSpec>;

/// MMIX linear congruential generator: x <- a x + c mod 2^64, returning the
/// top 53 bits as a double in [0, 1).
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() {
    state_ = kMultiplier * state_ + kIncrement;
    return state_;
  }
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Produces an admissible initial support function or throws ConfigError
/// naming the violated invariant (with min rho).
SupportSamples generate_initial(const InitialSpec& spec, int winding, std::size_t grid, int k);

struct OutputPaths {
  std::string dir = "kflow_out";
  std::string series = "series.csv";
  std::string report = "report.json";
  std::string snapshots = "snapshots";
  bool operator==(const OutputPaths&) const = default;
};

struct RunConfig {
  int m = 1;
  FlowParams params;
  ConvergenceTolerances tolerances;
  InitialSpec initial = CircleSpec{};
  OutputPaths output;
  bool operator==(const RunConfig& o) const;
};

/// Throws ConfigError (line number for syntax errors, field path otherwise).
RunConfig parse_config(std::string_view text);
std::string write_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

struct Snapshot {
  double t = 0.0;
  SupportSamples p;
};

std::string write_snapshot(const Snapshot& snapshot);
/// Throws ParseError naming the offending line.
Snapshot parse_snapshot(std::string_view text);
Snapshot load_snapshot(const std::filesystem::path& path);

inline constexpr std::string_view kSeriesColumns =
    "t,energy,f,a0,min_rho,max_rho,width_defect,symmetry_defect,grad_rho_k_max,drift_rho_offset,drift_p_offset";

std::string write_series_csv(const std::vector<SeriesRow>& rows);

std::string write_report_json(const InvariantReport& report, const RunConfig& config, const Trajectory& trajectory);

/// Single-polyline SVG, viewBox padded 5% beyond the bounding box, stroke
/// width 0.5% of the larger box dimension. y is flipped to screen space.
std::string render_svg(const PlaneCurve& curve);

/// 17 significant digits.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace kflow
