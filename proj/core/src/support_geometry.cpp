#include "kflow/support_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kflow/error.hpp"
#include "kflow/spectral.hpp"

namespace kflow {
namespace {

void require_same_grid(const SupportSamples& a, const SupportSamples& b) {
  if (a.winding() != b.winding() || a.size() != b.size())
    throw Error(ErrorCode::InvalidArgument, "support samples live on different grids");
}

void require_divides(int k, std::size_t grid) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1, got " + std::to_string(k));
  if (grid % static_cast<std::size_t>(k) != 0)
    throw Error(ErrorCode::InvalidArgument,
                "k = " + std::to_string(k) + " does not divide grid size " + std::to_string(grid));
}

void require_positive_rho(const SupportSamples& rho, const char* what) {
  const double lo = rho.min();
  if (!(lo > 0.0))
    throw Error(ErrorCode::NotConvex,
                std::string(what) + ": curve is not locally convex (min rho = " + std::to_string(lo) + ")");
}

}  // namespace

SupportSamples::SupportSamples(int winding, std::vector<double> values)
    : winding_(winding), values_(std::move(values)) {
  if (winding_ < 1) throw Error(ErrorCode::InvalidArgument, "winding number must be >= 1");
  if (values_.size() < kMinGrid || values_.size() % 2 != 0)
    throw Error(ErrorCode::InvalidArgument,
                "grid size must be even and >= 16, got " + std::to_string(values_.size()));
}

double SupportSamples::min() const { return *std::min_element(values_.begin(), values_.end()); }
double SupportSamples::max() const { return *std::max_element(values_.begin(), values_.end()); }

double SupportSamples::integrate() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * spacing();
}

SupportSamples SupportSamples::operator+(const SupportSamples& other) const {
  require_same_grid(*this, other);
  std::vector<double> out(values_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += other.values_[j];
  return {winding_, std::move(out)};
}

SupportSamples SupportSamples::operator-(const SupportSamples& other) const {
  require_same_grid(*this, other);
  std::vector<double> out(values_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= other.values_[j];
  return {winding_, std::move(out)};
}

SupportSamples SupportSamples::operator*(double scale) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= scale;
  return {winding_, std::move(out)};
}

SupportSamples SupportSamples::plus(double offset) const {
  std::vector<double> out(values_);
  for (double& v : out) v += offset;
  return {winding_, std::move(out)};
}

double sup_distance(const SupportSamples& a, const SupportSamples& b) {
  require_same_grid(a, b);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  return worst;
}

int FourierSupport::max_mode() const {
  int n_max = 0;
  for (const auto& md : modes) n_max = std::max(n_max, md.n);
  return n_max;
}

FourierMode FourierSupport::mode(int n) const {
  for (const auto& md : modes)
    if (md.n == n) return md;
  return {n, 0.0, 0.0};
}

double PlaneCurve::closure_defect() const {
  if (points.empty()) return 0.0;
  return std::hypot(points.front().x - wrap_point.x, points.front().y - wrap_point.y);
}

double PlaneCurve::polyline_length() const {
  double length = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Point2& a = points[j];
    const Point2& b = points[(j + 1) % points.size()];
    length += std::hypot(b.x - a.x, b.y - a.y);
  }
  return length;
}

SupportSamples spectral_derivative(const SupportSamples& p, int order) {
  if (order < 1 || order > 4)
    throw Error(ErrorCode::InvalidArgument, "derivative order must be in 1..4, got " + std::to_string(order));
  return {p.winding(), spectral::derivative(p.values(), p.winding(), order)};
}

SupportSamples rho_from_p(const SupportSamples& p) { return p + spectral_derivative(p, 2); }

SupportSamples k_shift_sum(const SupportSamples& field, int k) {
  const std::size_t grid = field.size();
  require_divides(k, grid);
  const std::size_t shift = grid / static_cast<std::size_t>(k);
  std::vector<double> out(grid, 0.0);
  for (std::size_t j = 0; j < grid; ++j) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += field[(j + static_cast<std::size_t>(i) * shift) % grid];
    out[j] = sum;
  }
  return {field.winding(), std::move(out)};
}

SupportSamples rotate_by_fraction(const SupportSamples& field, int k) {
  const std::size_t grid = field.size();
  require_divides(k, grid);
  const std::size_t shift = grid / static_cast<std::size_t>(k);
  std::vector<double> out(grid);
  for (std::size_t j = 0; j < grid; ++j) out[j] = field[(j + shift) % grid];
  return {field.winding(), std::move(out)};
}

ConvexityCheck is_locally_convex(const SupportSamples& p) {
  const double lo = rho_from_p(p).min();
  return {lo > 0.0, lo};
}

bool is_admissible(const SupportSamples& p) {
  const auto rho = rho_from_p(p);
  const double hi = rho.max();
  return hi > 0.0 && rho.min() > kAdmissibleMargin * hi;
}

double elastic_energy_from_rho(const SupportSamples& rho) {
  require_positive_rho(rho, "elastic_energy");
  double sum = 0.0;
  for (double r : rho.values()) sum += 1.0 / r;
  return sum * rho.spacing();
}

double elastic_energy(const SupportSamples& p) { return elastic_energy_from_rho(rho_from_p(p)); }

double curve_length(const SupportSamples& p) {
  const auto rho = rho_from_p(p);
  require_positive_rho(rho, "curve_length");
  return rho.integrate();
}

PlaneCurve reconstruct_curve(const SupportSamples& p) {
  const auto rho = rho_from_p(p);
  require_positive_rho(rho, "reconstruct_curve");
  const auto dp = spectral_derivative(p, 1);
  PlaneCurve curve;
  curve.points.reserve(p.size());
  double tx = 0.0;
  double ty = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double th = p.theta(j);
    const double c = std::cos(th);
    const double s = std::sin(th);
    curve.points.push_back({dp[j] * c + p[j] * s, dp[j] * s - p[j] * c});
    tx += rho[j] * c;
    ty += rho[j] * s;
  }
  // End point reached by integrating dX/dtheta = rho T over the full period.
  const double h = p.spacing();
  curve.wrap_point = {curve.points.front().x + tx * h, curve.points.front().y + ty * h};
  return curve;
}

FourierSupport analyze(const SupportSamples& p, int max_mode) {
  const std::size_t nyquist = p.size() / 2;
  if (max_mode < 0 || static_cast<std::size_t>(max_mode) >= nyquist)
    throw Error(ErrorCode::InvalidArgument,
                "analyze: max mode " + std::to_string(max_mode) + " must be below G/2 = " + std::to_string(nyquist));
  const auto coeffs = spectral::forward(p.values());
  FourierSupport out;
  out.winding = p.winding();
  out.a0 = 2.0 * coeffs[0].real();
  out.modes.reserve(static_cast<std::size_t>(max_mode));
  for (int n = 1; n <= max_mode; ++n) {
    const auto& c = coeffs[static_cast<std::size_t>(n)];
    out.modes.push_back({n, 2.0 * c.real(), -2.0 * c.imag()});
  }
  return out;
}

FourierSupport analyze(const SupportSamples& p) { return analyze(p, static_cast<int>(p.size() / 2) - 1); }

SupportSamples synthesize(const FourierSupport& f, std::size_t grid) {
  if (grid < kMinGrid || grid % 2 != 0)
    throw Error(ErrorCode::InvalidArgument, "synthesize: grid must be even and >= 16");
  if (2 * static_cast<std::size_t>(f.max_mode()) >= grid)
    throw Error(ErrorCode::InvalidArgument, "synthesize: mode " + std::to_string(f.max_mode()) +
                                                " aliases on grid of size " + std::to_string(grid));
  std::vector<spectral::Complex> coeffs(grid / 2 + 1, 0.0);
  coeffs[0] = f.a0 / 2.0;
  for (const auto& md : f.modes) {
    if (md.n < 1) throw Error(ErrorCode::InvalidArgument, "synthesize: mode index must be >= 1");
    coeffs[static_cast<std::size_t>(md.n)] += spectral::Complex(md.a / 2.0, -md.b / 2.0);
  }
  return {f.winding, spectral::inverse(coeffs, grid)};
}

double width_defect(const SupportSamples& p, int k) {
  const auto wk = k_shift_sum(p, k);
  return wk.max() - wk.min();
}

double symmetry_defect(const SupportSamples& p, int k) {
  const auto rotated = rotate_by_fraction(p, k);
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double d = p[j] - rotated[j];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(p.size()));
}

}  // namespace kflow
