#pragma once

// Verdicts over flow trajectories: conserved-quantity drift, the first-order
// gradient decay bound, curvature-radius bounds, fitted mode decay rates, and
// the limit classification.

#include <limits>
#include <string_view>
#include <vector>

#include "kflow/flow.hpp"

namespace kflow {

enum class LimitClass { CircleLimit, ConstantWidthLimit, NotConverged };

std::string_view limit_class_name(LimitClass c);

struct ConvergenceTolerances {
  double width = 1e-8;
  /// max p - min p below this counts as a circle.
  double circle = 1e-6;
  /// Initial symmetry_defect below this counts as k-symmetric.
  double symmetry = 1e-10;
};

struct DriftSummary {
  double energy = 0.0;
  double offset_rho = 0.0;
  double offset_p = 0.0;
};

/// Maxima over snapshots of |E - E0| / E0 and the sup-norm offset drifts.
DriftSummary conserved_drift(const Trajectory& trajectory);

/// Gradients below this multiple of max |rho_k(., 0)| count as exactly zero.
inline constexpr double kGradientNoiseFloor = 1e-11;
/// rho_k' is a third derivative of p, so its roundoff is about
/// eps (G / 2m)^3 max|p|; gradients below this multiple of that level are noise.
inline constexpr double kGradientRoundoffFactor = 10.0;

/// min over snapshots of max|rho_k'|(0) e^{-k t} / max|rho_k'|(t), skipping
/// snapshots whose gradient is under the noise floor; +inf when all are.
double gradient_bound_check(const Trajectory& trajectory);

struct RadiusBounds {
  double m0;
  double M0;
  double empirical_M1;
  double min_rho;
  double max_rho;
  bool satisfied;
};

/// m0 = (2 m pi / E0) e^{-M1 E0}, M0 = (2 m pi / E0) e^{M1 E0} with the
/// empirical M1 = max over the run of max |rho'|; checks m0 <= rho <= M0
/// up to a 1e-9 relative slack.
RadiusBounds radius_bounds_check(const Trajectory& trajectory);

struct DecayFit {
  int n;
  /// 'a' for the cosine coefficient, 'b' for the sine coefficient.
  char component;
  double fitted_rate;
  double predicted_rate;
  double relative_error;
  std::size_t samples;
};

inline constexpr double kAmplitudeFloor = 1e-12;

/// Least-squares slope of log|a_n(t)| (and b_n) for every k-multiple mode
/// above `amplitude_floor` at t = 0, using the leading run of snapshots whose
/// amplitude exceeds 100 * amplitude_floor. Needs >= 10 snapshots.
std::vector<DecayFit> decay_fit(const Trajectory& trajectory, double amplitude_floor = kAmplitudeFloor);

struct ConvergenceVerdict {
  LimitClass classification;
  double width_defect;
  double p_variation;
  double symmetry_defect;
  /// False when the limit contradicts the initial symmetry (circle limit iff
  /// k-symmetric initial data). Not-converged states are never flagged.
  bool consistent;
};

ConvergenceVerdict convergence_report(const FlowState& final_state, double initial_symmetry_defect,
                                      const ConvergenceTolerances& tolerances = {});

/// Limit predicted from the frozen modes and energy conservation: the
/// non-k-multiple modes of the initial p plus the mean a0(inf) solving
/// integral 1 / (a0/2 + rho_frozen) = E0.
FourierSupport predicted_limit(const SupportSamples& initial, int k);

struct InvariantReport {
  double energy_drift = 0.0;
  double offset_drift_rho = 0.0;
  double offset_drift_p = 0.0;
  double min_rho_over_run = 0.0;
  double max_rho_over_run = 0.0;
  double empirical_M1 = 0.0;
  double m0 = 0.0;
  double M0 = 0.0;
  bool radius_bounds_satisfied = false;
  double gradient_bound_margin = std::numeric_limits<double>::infinity();
  std::vector<DecayFit> decay_fits;
  double initial_symmetry_defect = 0.0;
  double final_width_defect = 0.0;
  double final_symmetry_defect = 0.0;
  double final_p_variation = 0.0;
  double final_radius = 0.0;
  double limit_radius_prediction = 0.0;
  LimitClass classification = LimitClass::NotConverged;
  bool classification_consistent = true;
  bool converged = false;
  double t_final = 0.0;
};

InvariantReport build_report(const Trajectory& trajectory, const ConvergenceTolerances& tolerances = {});

}  // namespace kflow
