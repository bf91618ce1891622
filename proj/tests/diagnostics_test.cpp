#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "kflow/diagnostics.hpp"
#include "kflow/error.hpp"

using namespace kflow;

namespace {

constexpr double kPi = std::numbers::pi;

SupportSamples perturbed(std::size_t grid = 128) {
  return SupportSamples::sample(1, grid, [](double t) { return 1.0 + 0.05 * std::cos(2 * t); });
}

Trajectory spectral_run(const SupportSamples& p, int k, double t_end, double interval = 0.05,
                        double width_tolerance = 0.0) {
  FlowParams params;
  params.k = k;
  params.grid = p.size();
  params.t_end = t_end;
  params.snapshot_interval = interval;
  params.width_tolerance = width_tolerance;
  return run_flow(params, p);
}

}  // namespace

TEST(Drift, SpectralRunConserves) {
  const auto d = conserved_drift(spectral_run(perturbed(), 2, 1.0));
  EXPECT_LT(d.energy, 1e-10);
  EXPECT_LT(d.offset_rho, 1e-10);
  EXPECT_LT(d.offset_p, 1e-10);
}

TEST(GradientBound, SingleModeMarginIsOneAtStart) {
  // gradient decays like e^{-10 t} against the bound e^{-2 t}
  const auto traj = spectral_run(perturbed(), 2, 1.0, 0.1);
  EXPECT_NEAR(gradient_bound_check(traj), 1.0, 1e-12);
}

TEST(GradientBound, CircleHasNoGradient) {
  const auto traj = spectral_run(SupportSamples::constant(1, 64, 1.0), 2, 0.2, 0.1);
  EXPECT_EQ(gradient_bound_check(traj), std::numeric_limits<double>::infinity());
}

TEST(RadiusBounds, MatchesIndependentFormula) {
  const auto traj = spectral_run(perturbed(), 2, 0.5, 0.1);
  const auto rb = radius_bounds_check(traj);
  // rho' = 0.3 sin 2t at t = 0 is the largest slope of the run
  const double m1 = 0.3;
  const double e0 = 2.0 * kPi / std::sqrt(1.0 - 0.15 * 0.15);
  EXPECT_NEAR(rb.empirical_M1, m1, 1e-10);
  EXPECT_NEAR(rb.m0 / (2.0 * kPi / e0 * std::exp(-m1 * e0)), 1.0, 1e-9);
  EXPECT_NEAR(rb.M0 / (2.0 * kPi / e0 * std::exp(m1 * e0)), 1.0, 1e-9);
  EXPECT_NEAR(rb.min_rho, 0.85, 1e-12);
  EXPECT_TRUE(rb.satisfied);
}

TEST(DecayFit, RecoversExactRate) {
  const auto traj = spectral_run(perturbed(), 2, 1.0);
  const auto fits = decay_fit(traj);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_EQ(fits[0].n, 2);
  EXPECT_EQ(fits[0].component, 'a');
  EXPECT_DOUBLE_EQ(fits[0].predicted_rate, 10.0);
  EXPECT_LT(fits[0].relative_error, 1e-8);
  EXPECT_GE(fits[0].samples, 10u);
}

TEST(DecayFit, NeedsEnoughSnapshots) {
  const auto traj = spectral_run(perturbed(), 2, 0.2, 0.1);
  try {
    decay_fit(traj);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Convergence, Classification) {
  const auto circle = initial_state(SupportSamples::constant(1, 96, 1.0), 2);
  const auto v_circle = convergence_report(circle, 0.0);
  EXPECT_EQ(v_circle.classification, LimitClass::CircleLimit);
  EXPECT_TRUE(v_circle.consistent);

  const auto cw = initial_state(SupportSamples::sample(1, 96, [](double t) { return 1.0 + 0.1 * std::cos(2 * t); }), 3);
  const auto v_cw = convergence_report(cw, 0.2);
  EXPECT_EQ(v_cw.classification, LimitClass::ConstantWidthLimit);
  EXPECT_TRUE(v_cw.consistent);
  // a non-circular limit contradicts k-symmetric initial data
  EXPECT_FALSE(convergence_report(cw, 0.0).consistent);
  // and a circle contradicts non-symmetric initial data
  EXPECT_FALSE(convergence_report(circle, 0.2).consistent);

  const auto moving = initial_state(perturbed(96), 2);
  const auto v_moving = convergence_report(moving, 0.0);
  EXPECT_EQ(v_moving.classification, LimitClass::NotConverged);
  EXPECT_TRUE(v_moving.consistent);
}

TEST(PredictedLimit, SymmetricCurveGivesEnergyCircle) {
  const auto f = predicted_limit(perturbed(), 2);
  EXPECT_NEAR(f.a0 / 2.0, std::sqrt(0.9775), 1e-12);
  for (const auto& md : f.modes) EXPECT_LT(std::hypot(md.a, md.b), 1e-15);
}

TEST(PredictedLimit, FrozenModesAndEnergyMean) {
  const auto p = synthesize(FourierSupport{2, 4.0, {{1, 0.1, 0.0}, {4, 0.02, 0.0}}}, 128);
  const auto f = predicted_limit(p, 2);
  EXPECT_NEAR(f.mode(1).a, 0.1, 1e-14);
  EXPECT_NEAR(f.mode(4).a, 0.0, 1e-14);

  // independent oracle: rho(0) = 2 + 0.075 cos(t/2) - 0.06 cos 2t; the limit keeps
  // the frozen term and has mean c with integral over [0, 4 pi) of 1/rho equal to E0
  auto energy_of = [](double c, double cos2) {
    const int n = 100000;
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
      const double t = 4.0 * kPi * (j + 0.5) / n;
      e += 1.0 / (c + 0.075 * std::cos(t / 2) + cos2 * std::cos(2 * t));
    }
    return e * 4.0 * kPi / n;
  };
  const double e0 = energy_of(2.0, -0.06);
  double lo = 1.0;
  double hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (energy_of(mid, 0.0) > e0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(f.a0 / 2.0, 0.5 * (lo + hi), 1e-10);
}

TEST(Report, PerturbedCircleRun) {
  const auto traj = spectral_run(perturbed(), 2, 3.0, 0.05, 1e-8);
  const auto r = build_report(traj);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.classification, LimitClass::CircleLimit);
  EXPECT_TRUE(r.classification_consistent);
  EXPECT_NEAR(r.final_radius, std::sqrt(0.9775), 1e-6);
  EXPECT_NEAR(r.limit_radius_prediction, std::sqrt(0.9775), 1e-12);
  EXPECT_LT(r.energy_drift, 1e-8);
  EXPECT_TRUE(r.radius_bounds_satisfied);
  EXPECT_GE(r.gradient_bound_margin, 1.0 - 1e-6);
  EXPECT_EQ(limit_class_name(r.classification), "circle_limit");
}

TEST(Report, ClassNames) {
  EXPECT_EQ(limit_class_name(LimitClass::ConstantWidthLimit), "constant_k_width_limit");
  EXPECT_EQ(limit_class_name(LimitClass::NotConverged), "not_converged");
}
