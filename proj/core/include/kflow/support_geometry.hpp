#pragma once

// Support-function calculus for locally convex plane curves parametrized by
// tangent angle. A curve of winding number m is stored as samples of its
// support function p on the uniform periodic grid theta_j = 2 m pi j / G.

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace kflow {

/// Smallest grid the spectral operators accept.
inline constexpr std::size_t kMinGrid = 16;

/// Relative margin for curve admissibility: min rho > kAdmissibleMargin * max rho.
inline constexpr double kAdmissibleMargin = 1e-9;

class SupportSamples {
 public:
  /// Throws InvalidArgument unless winding >= 1, G >= 16 and G even.
  SupportSamples(int winding, std::vector<double> values);

  /// Samples `fn(theta)` on the grid of size `grid`.
  template <class Fn>
  static SupportSamples sample(int winding, std::size_t grid, Fn&& fn) {
    std::vector<double> v(grid);
    const double h = 2.0 * std::numbers::pi * winding / static_cast<double>(grid);
    for (std::size_t j = 0; j < grid; ++j) v[j] = fn(h * static_cast<double>(j));
    return SupportSamples(winding, std::move(v));
  }

  static SupportSamples constant(int winding, std::size_t grid, double value) {
    return SupportSamples(winding, std::vector<double>(grid, value));
  }

  int winding() const noexcept { return winding_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const noexcept { return values_[j]; }

  /// Grid spacing 2 m pi / G.
  double spacing() const noexcept {
    return 2.0 * std::numbers::pi * winding_ / static_cast<double>(values_.size());
  }
  double theta(std::size_t j) const noexcept { return spacing() * static_cast<double>(j); }

  double min() const;
  double max() const;
  /// Trapezoidal quadrature over one full period [0, 2 m pi).
  double integrate() const;

  /// Samplewise arithmetic; both operands must share winding and grid.
  SupportSamples operator+(const SupportSamples& other) const;
  SupportSamples operator-(const SupportSamples& other) const;
  SupportSamples operator*(double scale) const;
  SupportSamples plus(double offset) const;

  bool operator==(const SupportSamples&) const = default;

 private:
  int winding_;
  std::vector<double> values_;
};

/// Max |a - b| over the grid. Operands must share winding and grid.
double sup_distance(const SupportSamples& a, const SupportSamples& b);

struct FourierMode {
  int n;
  double a;
  double b;
};

/// p(theta) = a0/2 + sum_n (a_n cos(n theta/m) + b_n sin(n theta/m)).
struct FourierSupport {
  int winding = 1;
  double a0 = 0.0;
  std::vector<FourierMode> modes;

  /// Largest mode index present (0 when there are no modes).
  int max_mode() const;
  /// Coefficient pair for mode n (zeros if absent).
  FourierMode mode(int n) const;
};

struct Point2 {
  double x;
  double y;
};

struct PlaneCurve {
  /// One point per grid angle.
  std::vector<Point2> points;
  /// The point recomputed at theta = 2 m pi; equals points[0] for a closed curve.
  Point2 wrap_point{};

  double closure_defect() const;
  /// Length of the closed polyline through the points.
  double polyline_length() const;
};

struct ConvexityCheck {
  bool convex;
  double min_rho;
};

/// order-th theta derivative by discrete Fourier differentiation in the basis
/// exp(i n theta / m). Odd derivatives zero the Nyquist mode. order in 1..4.
SupportSamples spectral_derivative(const SupportSamples& p, int order);

/// Radius of curvature rho = p + p_thetatheta.
SupportSamples rho_from_p(const SupportSamples& p);

/// sum_{i<k} field(theta + 2 i m pi / k). Requires k >= 1 dividing G.
SupportSamples k_shift_sum(const SupportSamples& field, int k);

/// field(theta + 2 m pi / k), an exact index rotation by G / k.
SupportSamples rotate_by_fraction(const SupportSamples& field, int k);

ConvexityCheck is_locally_convex(const SupportSamples& p);

/// min rho > kAdmissibleMargin * max rho.
bool is_admissible(const SupportSamples& p);

/// E = integral of 1/rho over [0, 2 m pi). Throws NotConvex when any rho <= 0.
double elastic_energy(const SupportSamples& p);

/// Same quantity from an already computed rho field.
double elastic_energy_from_rho(const SupportSamples& rho);

/// L = integral of rho. Throws NotConvex on non-convex input.
double curve_length(const SupportSamples& p);

/// X = p_theta T - p N with T = (cos, sin), N = (-sin, cos).
PlaneCurve reconstruct_curve(const SupportSamples& p);

/// Discrete Fourier analysis up to mode max_mode. Requires max_mode < G/2.
FourierSupport analyze(const SupportSamples& p, int max_mode);

/// All modes below Nyquist.
FourierSupport analyze(const SupportSamples& p);

/// Evaluates the series on a grid of size G. Requires G even, G > 2 max_mode.
SupportSamples synthesize(const FourierSupport& f, std::size_t grid);

/// max w_k - min w_k.
double width_defect(const SupportSamples& p, int k);

/// RMS over the grid of p(theta) - p(theta + 2 m pi / k).
double symmetry_defect(const SupportSamples& p, int k);

}  // namespace kflow
