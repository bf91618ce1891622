#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kflow/flow.hpp"

namespace kflow {

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

struct AcceptanceOptions {
  /// Multiplies the finite-difference step (1 = exactly the stability bound).
  double fd_dt_scale = 1.0;
  /// Overrides the grid of every standard run when nonzero.
  std::size_t grid_override = 0;
  /// Horizon of the conservation runs.
  double horizon = 5.0;
  /// Called once per finished criterion (for streaming output).
  std::function<void(const CriterionResult&)> on_result;
};

/// A named initial curve with its winding number, k and grid.
struct StandardCurve {
  std::string name;
  int m;
  int k;
  std::size_t grid;
  SupportSamples p;
};

/// perturbed circle (m=1, k=2), constant 3-width (m=1, k=3), mixed (m=2, k=2).
std::vector<StandardCurve> standard_curves(std::size_t grid_override = 0);

/// Runs every acceptance criterion; failures (including solver errors) are
/// reported as failed rows, never thrown.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

}  // namespace kflow
