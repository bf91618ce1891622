#pragma once

// Time evolution of the energy-preserving nonlocal k-width flow
//
//   dX/dt = (2 w_k - rho_k + f(t)) N
//
// in the fixed tangent-angle formulation, where the support function obeys
// dp/dt = rho_k - 2 w_k - f. Three independent pathways are provided:
//
//   * spectral:       exact per-mode exponential decay of the k-multiple
//                     modes, frozen non-multiples, and an RK4-integrated mean.
//   * finite_difference: method of lines on the coupled system for
//                     (p, rho_k, w_k, rho) with spectral space derivatives
//                     and classical RK4 in time.
//   * lambda_reconstruction: exact evolution of eta_k = d rho_k / d theta,
//                     with the integration constant lambda(t) fixed by
//                     conservation of the elastic energy.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kflow/support_geometry.hpp"

namespace kflow {

enum class SolverKind { Spectral, FiniteDifference, LambdaReconstruction };

std::string_view solver_name(SolverKind kind);
/// Accepts "spectral", "finite_difference", "lambda_reconstruction".
std::optional<SolverKind> parse_solver(std::string_view name);

/// Default relative convexity guard: trips when min rho < 1e-6 * max rho(0).
inline constexpr double kDefaultGuardFraction = 1e-6;
/// Safety factor in the explicit stability bound dt <= 0.2 dtheta^2 / k.
inline constexpr double kStabilityFactor = 0.2;

struct FlowParams {
  int k = 2;
  SolverKind solver = SolverKind::Spectral;
  std::size_t grid = 256;
  double dt = 1e-3;
  double t_end = 1.0;
  double snapshot_interval = 0.1;
  /// Spacing of time-series rows; 0 records every step.
  double series_interval = 0.0;
  /// Absolute guard on min rho; <= 0 selects kDefaultGuardFraction * max rho(0).
  double convexity_guard = 0.0;
  /// Early stop once width_defect < width_tolerance. 0 disables.
  double width_tolerance = 1e-8;

  bool operator==(const FlowParams&) const = default;
};

/// Largest step the finite-difference solver accepts: 0.2 (2 m pi / G)^2 / k.
double fd_stable_dt(int winding, std::size_t grid, int k);

/// Throws ConfigError for malformed parameters and StabilityViolation for a
/// finite-difference step above fd_stable_dt. Returns warnings (k = 1).
std::vector<std::string> validate_params(const FlowParams& params, int winding);

/// Decay rate k (n^2 / m^2 + 1) of Fourier mode n (a multiple of k) of p.
double mode_decay_rate(int n, int winding, int k);

struct FlowState {
  int k;
  double t;
  SupportSamples p;
  SupportSamples rho;
  SupportSamples rho_k;
  SupportSamples w_k;
  double f;
  /// Elastic energy at t = 0.
  double energy0;
  /// rho_k(., 0) - k rho(., 0), constant in time.
  SupportSamples offset_rho;
  /// p(., 0) - w_k(., 0) / k, constant in time.
  SupportSamples offset_p;
};

/// Builds the t = 0 state: caches, f, E0 and the conserved offsets.
/// Throws NotConvex on a non-admissible curve.
FlowState initial_state(const SupportSamples& p, int k);

/// State at time t with the given support function, carrying E0 and offsets
/// over from `reference` and recomputing the cached fields from p.
FlowState state_from_support(const FlowState& reference, SupportSamples p, double t);

/// f = [int kappa^2 rho_k'' - int kappa^2 rho_k] / int kappa^2, kappa = 1/rho.
double nonlocal_f(const SupportSamples& rho, const SupportSamples& rho_k);
double nonlocal_f(const FlowState& state);

/// beta = 2 w_k - rho_k + f.
SupportSamples normal_speed(const FlowState& state);

/// alpha = -2 dw_k/dtheta + d rho_k/dtheta. Diagnostic only.
SupportSamples tangential_speed(const FlowState& state);

/// One RK4 step of the coupled system for (p, rho_k, w_k, rho).
/// Throws StabilityViolation if dt > fd_stable_dt and ConvexityLost when the
/// new min rho drops below `convexity_guard`.
FlowState fd_step(const FlowState& state, double dt, double convexity_guard);

struct SpectralState {
  int winding = 1;
  int k = 2;
  double t = 0.0;
  /// Mean coefficient at time t.
  double a0 = 0.0;
  /// Modes n with k | n, coefficients at t = 0.
  std::vector<FourierMode> decaying;
  /// Modes n with k not dividing n; constant in time.
  std::vector<FourierMode> frozen;
};

/// Splits the full spectrum of p into decaying and frozen parts, t = 0.
SpectralState spectral_state_from(const SupportSamples& p, int k);

/// Fourier coefficients of p at the state's time.
FourierSupport spectral_support(const SpectralState& state);

SupportSamples spectral_samples(const SpectralState& state, std::size_t grid);

struct SpectralOptions {
  std::size_t grid = 256;
  double dt = 1e-3;
  /// Absolute guard on min rho at every RK stage.
  double convexity_guard = 0.0;
};

/// Advances to t_target: exact decay of k-multiple modes, RK4 on
/// a0' = -k a0 - 2 f(t) with the last step shortened to land on t_target.
SpectralState spectral_evolve(const SpectralState& initial, double t_target, const SpectralOptions& options);

struct LambdaSolution {
  FlowState state;
  double lambda;
};

/// Reconstructs the state at t_target directly from `initial` through the
/// eta_k heat equation and the energy identity for lambda(t).
/// Throws BracketFailure if no admissible lambda exists and ConvexityLost
/// when the reconstructed rho falls below the guard.
LambdaSolution lambda_solve(const FlowState& initial, double t_target, double convexity_guard);

FlowState lambda_reconstruct(const FlowState& initial, double t_target, double convexity_guard);

struct SeriesRow {
  double t;
  double energy;
  double f;
  double a0;
  double min_rho;
  double max_rho;
  double width_defect;
  double symmetry_defect;
  double grad_rho_k_max;
  double drift_rho_offset;
  double drift_p_offset;
};

SeriesRow series_row(const FlowState& state);

struct Trajectory {
  FlowParams params;
  /// Snapshots at t = 0, every snapshot_interval, and the final time.
  std::vector<FlowState> snapshots;
  std::vector<SeriesRow> series;
  bool converged = false;
  double t_final = 0.0;
  double convexity_guard = 0.0;
  std::vector<std::string> warnings;
};

/// Steps the selected solver from 0 to t_end. Solver errors are rethrown with
/// the failing time in the message.
Trajectory run_flow(const FlowParams& params, const SupportSamples& initial);

}  // namespace kflow
