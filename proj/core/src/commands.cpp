#include "kflow/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "kflow/diagnostics.hpp"
#include "kflow/flow.hpp"
#include "kflow/io.hpp"

namespace fs = std::filesystem;

namespace kflow {
namespace {

constexpr double kVerdictTolerance = 1e-10;

void report_error(std::ostream& err, const Error& e) { err << e.name() << ": " << e.what() << "\n"; }

// Relative output directories are taken relative to the config file.
fs::path resolve_output(const RunConfig& cfg, const fs::path& config_path) {
  const fs::path dir(cfg.output.dir);
  return dir.is_absolute() ? dir : config_path.parent_path() / dir;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%05zu.csv", index);
  return buf;
}

int simulate_one(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    const SupportSamples initial = generate_initial(cfg.initial, cfg.m, cfg.params.grid, cfg.params.k);
    const Trajectory traj = run_flow(cfg.params, initial);
    for (const auto& w : traj.warnings) err << "warning: " << w << "\n";
    const InvariantReport report = build_report(traj, cfg.tolerances);

    const fs::path dir = resolve_output(cfg, config_path);
    ensure_dir(dir);
    ensure_dir(dir / cfg.output.snapshots);
    write_text_file(dir / cfg.output.series, write_series_csv(traj.series));
    write_text_file(dir / cfg.output.report, write_report_json(report, cfg, traj));
    write_text_file(dir / "config.json", write_config(cfg));
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
      const auto& s = traj.snapshots[i];
      write_text_file(dir / cfg.output.snapshots / snapshot_name(i), write_snapshot({s.t, s.p}));
    }
    out << config_path.string() << ": " << limit_class_name(report.classification) << " at t = " << traj.t_final
        << " (energy drift " << std::scientific << std::setprecision(2) << report.energy_drift << std::defaultfloat
        << std::setprecision(6) << ", " << traj.snapshots.size() << " snapshots) -> " << dir.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << config_path.string() << ": ";
    report_error(err, e);
    return exit_status_for(e.code());
  }
}

const char* verdict(double width, double symmetry) {
  const bool constant_width = width < kVerdictTolerance;
  const bool symmetric = symmetry < kVerdictTolerance;
  if (constant_width && symmetric) return "m-fold circle";
  if (constant_width) return "constant k-order width, not k-symmetric";
  return "neither";
}

}  // namespace

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NotConvex:
      return kExitConfig;
    case ErrorCode::ConvexityLost:
    case ErrorCode::StabilityViolation:
    case ErrorCode::BracketFailure:
      return kExitSolver;
    case ErrorCode::IoError:
      return kExitIo;
  }
  return kExitFailure;
}

unsigned batch_threads() {
  if (const char* env = std::getenv("KFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_simulate(const fs::path& config, std::ostream& out, std::ostream& err, unsigned max_threads) {
  std::error_code ec;
  if (!fs::is_directory(config, ec)) return simulate_one(config, out, err);

  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(config, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json") configs.push_back(entry.path());
  if (ec) {
    err << "IoError: cannot list '" << config.string() << "': " << ec.message() << "\n";
    return kExitIo;
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    err << "ConfigError: no *.json configs in '" << config.string() << "'\n";
    return kExitConfig;
  }

  // One trajectory per worker; output is buffered per run and printed in order.
  std::vector<std::ostringstream> outs(configs.size());
  std::vector<std::ostringstream> errs(configs.size());
  std::vector<int> status(configs.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) status[i] = simulate_one(configs[i], outs[i], errs[i]);
  };
  const unsigned workers = std::clamp<unsigned>(max_threads, 1u, static_cast<unsigned>(configs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int worst = kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out << outs[i].str();
    err << errs[i].str();
    worst = std::max(worst, status[i]);
  }
  return worst;
}

int cmd_analyze(const fs::path& samples, int k, std::ostream& out, std::ostream& err) {
  try {
    const Snapshot snap = load_snapshot(samples);
    const SupportSamples& p = snap.p;
    const double width = width_defect(p, k);
    const double symmetry = symmetry_defect(p, k);
    const auto convexity = is_locally_convex(p);
    const auto rho = rho_from_p(p);

    out << std::setprecision(12);
    out << "file             " << samples.string() << "\n";
    out << "m                " << p.winding() << "\n";
    out << "G                " << p.size() << "\n";
    out << "t                " << snap.t << "\n";
    out << "k                " << k << "\n";
    if (convexity.convex) {
      out << "energy           " << elastic_energy_from_rho(rho) << "\n";
      out << "length           " << rho.integrate() << "\n";
    } else {
      out << "energy           n/a (not locally convex)\n";
      out << "length           n/a (not locally convex)\n";
    }
    out << "min_rho          " << rho.min() << "\n";
    out << "max_rho          " << rho.max() << "\n";
    out << "width_defect     " << width << "\n";
    out << "symmetry_defect  " << symmetry << "\n";

    const auto spectrum = analyze(p);
    out << "spectrum (modes with |c| > 1e-12)\n";
    out << "  n        a_n                  b_n                  k|n\n";
    out << "  0        " << std::setw(20) << spectrum.a0 << " (a0)\n";
    for (const auto& md : spectrum.modes) {
      if (std::hypot(md.a, md.b) <= 1e-12) continue;
      out << "  " << std::left << std::setw(8) << md.n << " " << std::setw(20) << md.a << " " << std::setw(20) << md.b
          << " " << (md.n % k == 0 ? "yes" : "no") << std::right << "\n";
    }
    out << "verdict          " << verdict(width, symmetry) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, e);
    return exit_status_for(e.code());
  }
}

int cmd_render(const fs::path& snapshot, const fs::path& svg, std::ostream& out, std::ostream& err) {
  try {
    const Snapshot snap = load_snapshot(snapshot);
    const PlaneCurve curve = reconstruct_curve(snap.p);
    write_text_file(svg, render_svg(curve));
    out << "wrote " << svg.string() << " (" << curve.points.size() << " points, closure defect "
        << curve.closure_defect() << ")\n";
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, e);
    return exit_status_for(e.code());
  }
}

int cmd_verify(const AcceptanceOptions& options, std::ostream& out, std::ostream& err) {
  AcceptanceOptions opts = options;
  opts.on_result = [&](const CriterionResult& r) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << std::setw(2) << r.id << "  " << r.name << "\n";
    std::istringstream lines(r.detail);
    for (std::string line; std::getline(lines, line);) out << "         " << line << "\n";
    out.flush();
  };
  const auto results = run_acceptance(opts);
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; });
  out << "\n" << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
  if (failed > 0) {
    err << failed << " acceptance criteria failed\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_gallery(const fs::path& dir, std::ostream& out, std::ostream& err) {
  struct Entry {
    std::string name;
    int m;
    int k;
    std::size_t grid;
    SolverKind solver;
    double t_end;
    InitialSpec initial;
  };
  const std::vector<Entry> entries = {
      {"circle", 1, 2, 256, SolverKind::Spectral, 1.0, CircleSpec{1.0}},
      {"double_circle", 2, 3, 264, SolverKind::Spectral, 1.0, CircleSpec{1.0}},
      {"perturbed_circle", 1, 2, 256, SolverKind::Spectral, 3.0, PerturbedCircleSpec{1.0, 2, 0.05}},
      {"constant_width", 1, 3, 264, SolverKind::Spectral, 1.0, FourierSpec{2.0, {{2, 0.1, 0.0}}}},
      {"mixed", 2, 2, 256, SolverKind::Spectral, 5.0, FourierSpec{4.0, {{1, 0.1, 0.0}, {4, 0.02, 0.0}}}},
      {"mixed_fd", 2, 2, 256, SolverKind::FiniteDifference, 2.0, FourierSpec{4.0, {{1, 0.1, 0.0}, {4, 0.02, 0.0}}}},
      {"k3_symmetric", 1, 3, 264, SolverKind::Spectral, 3.0, KSymmetricRandomSpec{7, 12, 0.05, 1.0}},
      {"triple_lambda", 3, 2, 256, SolverKind::LambdaReconstruction, 8.0,
       FourierSpec{2.0, {{1, 0.05, 0.0}, {2, 0.01, 0.02}, {4, 0.004, 0.0}}}},
  };
  try {
    ensure_dir(dir);
    for (const auto& e : entries) {
      RunConfig cfg;
      cfg.m = e.m;
      cfg.params.k = e.k;
      cfg.params.grid = e.grid;
      cfg.params.solver = e.solver;
      cfg.params.dt = e.solver == SolverKind::FiniteDifference ? fd_stable_dt(e.m, e.grid, e.k) : 1e-3;
      cfg.params.t_end = e.t_end;
      cfg.params.snapshot_interval = 0.05;
      cfg.params.series_interval = 0.01;
      cfg.initial = e.initial;
      cfg.output.dir = "run_" + e.name;
      const SupportSamples p = generate_initial(cfg.initial, cfg.m, cfg.params.grid, cfg.params.k);
      write_text_file(dir / (e.name + ".json"), write_config(cfg));
      write_text_file(dir / (e.name + "_initial.csv"), write_snapshot({0.0, p}));
      write_text_file(dir / (e.name + "_initial.svg"), render_svg(reconstruct_curve(p)));
      out << "gallery: " << e.name << " (m=" << e.m << ", k=" << e.k << ", " << solver_name(e.solver) << ")\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, e);
    return exit_status_for(e.code());
  }
}

}  // namespace kflow
