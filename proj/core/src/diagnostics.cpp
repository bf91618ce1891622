#include "kflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kflow/error.hpp"

namespace kflow {
namespace {

double max_abs(const SupportSamples& s) {
  double worst = 0.0;
  for (double v : s.values()) worst = std::max(worst, std::abs(v));
  return worst;
}

void require_nonempty(const Trajectory& trajectory) {
  if (trajectory.snapshots.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory has no snapshots");
}

// Slope of the least-squares line through (x, y).
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

std::string_view limit_class_name(LimitClass c) {
  switch (c) {
    case LimitClass::CircleLimit: return "circle_limit";
    case LimitClass::ConstantWidthLimit: return "constant_k_width_limit";
    case LimitClass::NotConverged: return "not_converged";
  }
  return "unknown";
}

DriftSummary conserved_drift(const Trajectory& trajectory) {
  require_nonempty(trajectory);
  DriftSummary drift;
  for (const auto& s : trajectory.snapshots) {
    const double energy = elastic_energy_from_rho(s.rho);
    drift.energy = std::max(drift.energy, std::abs(energy - s.energy0) / s.energy0);
    const auto rho_offset = s.rho_k - s.rho * static_cast<double>(s.k);
    drift.offset_rho = std::max(drift.offset_rho, sup_distance(rho_offset, s.offset_rho));
    const auto p_offset = s.p - s.w_k * (1.0 / s.k);
    drift.offset_p = std::max(drift.offset_p, sup_distance(p_offset, s.offset_p));
  }
  return drift;
}

double gradient_bound_check(const Trajectory& trajectory) {
  require_nonempty(trajectory);
  const FlowState& first = trajectory.snapshots.front();
  const double initial_gradient = max_abs(spectral_derivative(first.rho_k, 1));
  const double n_max = static_cast<double>(first.p.size()) / (2.0 * first.p.winding());
  const double roundoff = kGradientRoundoffFactor * std::numeric_limits<double>::epsilon() * n_max * n_max * n_max *
                          max_abs(first.p);
  const double floor = std::max(kGradientNoiseFloor * max_abs(first.rho_k), roundoff);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& s : trajectory.snapshots) {
    const double gradient = max_abs(spectral_derivative(s.rho_k, 1));
    if (gradient <= floor) continue;
    const double bound = initial_gradient * std::exp(-s.k * (s.t - first.t));
    margin = std::min(margin, bound / gradient);
  }
  return margin;
}

RadiusBounds radius_bounds_check(const Trajectory& trajectory) {
  require_nonempty(trajectory);
  RadiusBounds out{};
  out.min_rho = std::numeric_limits<double>::infinity();
  out.max_rho = -std::numeric_limits<double>::infinity();
  for (const auto& s : trajectory.snapshots) {
    out.empirical_M1 = std::max(out.empirical_M1, max_abs(spectral_derivative(s.rho, 1)));
    out.min_rho = std::min(out.min_rho, s.rho.min());
    out.max_rho = std::max(out.max_rho, s.rho.max());
  }
  const FlowState& first = trajectory.snapshots.front();
  const double energy = first.energy0;
  const double scale = 2.0 * std::numbers::pi * first.p.winding() / energy;
  out.m0 = scale * std::exp(-out.empirical_M1 * energy);
  out.M0 = scale * std::exp(out.empirical_M1 * energy);
  out.satisfied = out.m0 * (1.0 - 1e-9) <= out.min_rho && out.max_rho <= out.M0 * (1.0 + 1e-9);
  return out;
}

std::vector<DecayFit> decay_fit(const Trajectory& trajectory, double amplitude_floor) {
  if (trajectory.snapshots.size() < 10)
    throw Error(ErrorCode::InvalidArgument, "decay_fit needs at least 10 snapshots, got " +
                                                std::to_string(trajectory.snapshots.size()));
  const FlowState& first = trajectory.snapshots.front();
  const int k = first.k;
  const int m = first.p.winding();

  std::vector<FourierSupport> spectra;
  spectra.reserve(trajectory.snapshots.size());
  for (const auto& s : trajectory.snapshots) spectra.push_back(analyze(s.p));

  std::vector<DecayFit> fits;
  const double clean = 100.0 * amplitude_floor;
  for (const auto& md0 : spectra.front().modes) {
    if (md0.n % k != 0) continue;
    for (char component : {'a', 'b'}) {
      auto coefficient = [&](const FourierSupport& f) {
        const FourierMode md = f.modes[static_cast<std::size_t>(md0.n - 1)];
        return component == 'a' ? md.a : md.b;
      };
      if (std::abs(coefficient(spectra.front())) <= amplitude_floor) continue;
      std::vector<double> ts;
      std::vector<double> logs;
      for (std::size_t i = 0; i < spectra.size(); ++i) {
        const double c = std::abs(coefficient(spectra[i]));
        if (c <= clean) break;
        ts.push_back(trajectory.snapshots[i].t);
        logs.push_back(std::log(c));
      }
      if (ts.size() < 3) continue;
      const double fitted = -ls_slope(ts, logs);
      const double predicted = mode_decay_rate(md0.n, m, k);
      fits.push_back({md0.n, component, fitted, predicted, std::abs(fitted - predicted) / predicted, ts.size()});
    }
  }
  return fits;
}

ConvergenceVerdict convergence_report(const FlowState& final_state, double initial_symmetry_defect,
                                      const ConvergenceTolerances& tolerances) {
  ConvergenceVerdict v{};
  v.width_defect = final_state.w_k.max() - final_state.w_k.min();
  v.p_variation = final_state.p.max() - final_state.p.min();
  v.symmetry_defect = symmetry_defect(final_state.p, final_state.k);
  if (v.width_defect < tolerances.width && v.p_variation < tolerances.circle)
    v.classification = LimitClass::CircleLimit;
  else if (v.width_defect < tolerances.width)
    v.classification = LimitClass::ConstantWidthLimit;
  else
    v.classification = LimitClass::NotConverged;

  const bool symmetric = initial_symmetry_defect < tolerances.symmetry;
  v.consistent = true;
  if (v.classification == LimitClass::CircleLimit && !symmetric) v.consistent = false;
  if (v.classification == LimitClass::ConstantWidthLimit && symmetric) v.consistent = false;
  return v;
}

FourierSupport predicted_limit(const SupportSamples& initial, int k) {
  const auto spectrum = analyze(initial);
  FourierSupport frozen;
  frozen.winding = initial.winding();
  for (const auto& md : spectrum.modes)
    if (md.n % k != 0) frozen.modes.push_back(md);
  const double energy0 = elastic_energy(initial);

  const auto rho_frozen = rho_from_p(synthesize(frozen, initial.size()));
  const double h = initial.spacing();
  auto energy_of = [&](double a0) {
    double sum = 0.0;
    for (double r : rho_frozen.values()) sum += h / (a0 / 2.0 + r);
    return sum;
  };
  // energy_of is strictly decreasing on a0/2 > -min rho_frozen.
  double lo = -2.0 * rho_frozen.min();
  double hi = std::max(lo, 0.0) + 1.0;
  while (energy_of(hi) > energy0) hi = lo + 2.0 * (hi - lo);
  for (int iter = 0; iter < 400 && hi - lo > 1e-15 * std::abs(hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (energy_of(mid) > energy0)
      lo = mid;
    else
      hi = mid;
  }
  frozen.a0 = 0.5 * (lo + hi);
  return frozen;
}

InvariantReport build_report(const Trajectory& trajectory, const ConvergenceTolerances& tolerances) {
  require_nonempty(trajectory);
  InvariantReport report;
  const auto drift = conserved_drift(trajectory);
  report.energy_drift = drift.energy;
  report.offset_drift_rho = drift.offset_rho;
  report.offset_drift_p = drift.offset_p;

  const auto bounds = radius_bounds_check(trajectory);
  report.min_rho_over_run = bounds.min_rho;
  report.max_rho_over_run = bounds.max_rho;
  report.empirical_M1 = bounds.empirical_M1;
  report.m0 = bounds.m0;
  report.M0 = bounds.M0;
  report.radius_bounds_satisfied = bounds.satisfied;
  report.gradient_bound_margin = gradient_bound_check(trajectory);
  if (trajectory.snapshots.size() >= 10) report.decay_fits = decay_fit(trajectory);

  const FlowState& first = trajectory.snapshots.front();
  const FlowState& last = trajectory.snapshots.back();
  report.initial_symmetry_defect = symmetry_defect(first.p, first.k);
  const auto verdict = convergence_report(last, report.initial_symmetry_defect, tolerances);
  report.final_width_defect = verdict.width_defect;
  report.final_symmetry_defect = verdict.symmetry_defect;
  report.final_p_variation = verdict.p_variation;
  report.classification = verdict.classification;
  report.classification_consistent = verdict.consistent;
  report.final_radius = last.p.integrate() / (2.0 * std::numbers::pi * last.p.winding());
  report.limit_radius_prediction = 2.0 * std::numbers::pi * first.p.winding() / first.energy0;
  report.converged = trajectory.converged;
  report.t_final = trajectory.t_final;
  return report;
}

}  // namespace kflow
