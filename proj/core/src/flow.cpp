#include "kflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kflow/error.hpp"
#include "kflow/spectral.hpp"

namespace kflow {
namespace {

using Values = std::vector<double>;

// Rounding allowance when comparing a step with the stability bound.
constexpr double kStepSlack = 1e-9;
// RK4 substeps on a0 resolve the fastest live mode: h * rate <= this.
constexpr double kSpectralStepFactor = 0.005;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double min_of(const Values& v) { return *std::min_element(v.begin(), v.end()); }

Values shift_sum(const Values& field, int k) {
  const std::size_t grid = field.size();
  const std::size_t shift = grid / static_cast<std::size_t>(k);
  Values out(grid, 0.0);
  for (std::size_t j = 0; j < grid; ++j)
    for (int i = 0; i < k; ++i) out[j] += field[(j + static_cast<std::size_t>(i) * shift) % grid];
  return out;
}

// Literal quotient of curvature-weighted integrals; the common factor dtheta is
// kept so each sum is a trapezoidal integral.
double nonlocal_f_values(std::span<const double> rho, std::span<const double> rho_k, int winding) {
  const auto rho_k_tt = spectral::derivative(rho_k, winding, 2);
  const double h = 2.0 * std::numbers::pi * winding / static_cast<double>(rho.size());
  double weighted_second = 0.0;
  double weighted = 0.0;
  double weight = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const double kappa = 1.0 / rho[j];
    const double kappa2 = kappa * kappa;
    weighted_second += kappa2 * rho_k_tt[j] * h;
    weighted += kappa2 * rho_k[j] * h;
    weight += kappa2 * h;
  }
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw Error(ErrorCode::NotConvex, "nonlocal_f: curvature weight is not a positive finite number");
  return (weighted_second - weighted) / weight;
}

void check_guard(double min_rho, double guard, const char* where) {
  if (!(min_rho >= guard))
    throw Error(ErrorCode::ConvexityLost, std::string(where) + ": min rho = " + fmt_double(min_rho) +
                                              " fell below the convexity guard " + fmt_double(guard) +
                                              " (discretization failure)");
}

struct Fields {
  Values p, rho_k, w_k, rho;
};

// Right-hand side of the coupled system; f is recomputed from the stage fields.
Fields system_rhs(const Fields& y, int winding, int k) {
  const double f = nonlocal_f_values(y.rho, y.rho_k, winding);
  const auto rho_k_tt = spectral::derivative(y.rho_k, winding, 2);
  const auto w_k_tt = spectral::derivative(y.w_k, winding, 2);
  const std::size_t grid = y.p.size();
  Fields d{Values(grid), Values(grid), Values(grid), Values(grid)};
  const double kk = k;
  for (std::size_t j = 0; j < grid; ++j) {
    d.p[j] = y.rho_k[j] - 2.0 * y.w_k[j] - f;
    d.rho_k[j] = kk * (rho_k_tt[j] - y.rho_k[j] - f);
    d.w_k[j] = kk * (w_k_tt[j] - y.w_k[j] - f);
    d.rho[j] = rho_k_tt[j] - y.rho_k[j] - f;
  }
  return d;
}

// out = y + scale * d, fieldwise.
Fields axpy(const Fields& y, double scale, const Fields& d) {
  Fields out = y;
  auto apply = [scale](Values& dst, const Values& src) {
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  };
  apply(out.p, d.p);
  apply(out.rho_k, d.rho_k);
  apply(out.w_k, d.w_k);
  apply(out.rho, d.rho);
  return out;
}

// Full spectrum (c_0 .. c_{G/2}) of the spectral state's p at time t with mean a0.
std::vector<spectral::Complex> spectral_coefficients(const SpectralState& s, double t, double a0,
                                                     std::size_t grid) {
  std::vector<spectral::Complex> c(grid / 2 + 1, 0.0);
  c[0] = a0 / 2.0;
  auto place = [&](const FourierMode& md, double factor) {
    if (md.n < 1 || 2 * static_cast<std::size_t>(md.n) >= grid)
      throw Error(ErrorCode::InvalidArgument,
                  "spectral state mode " + std::to_string(md.n) + " aliases on grid " + std::to_string(grid));
    c[static_cast<std::size_t>(md.n)] += spectral::Complex(md.a * factor / 2.0, -md.b * factor / 2.0);
  };
  for (const auto& md : s.decaying) place(md, std::exp(-mode_decay_rate(md.n, s.winding, s.k) * t));
  for (const auto& md : s.frozen) place(md, 1.0);
  return c;
}

}  // namespace

std::string_view solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::Spectral: return "spectral";
    case SolverKind::FiniteDifference: return "finite_difference";
    case SolverKind::LambdaReconstruction: return "lambda_reconstruction";
  }
  return "unknown";
}

std::optional<SolverKind> parse_solver(std::string_view name) {
  if (name == "spectral") return SolverKind::Spectral;
  if (name == "finite_difference") return SolverKind::FiniteDifference;
  if (name == "lambda_reconstruction") return SolverKind::LambdaReconstruction;
  return std::nullopt;
}

double fd_stable_dt(int winding, std::size_t grid, int k) {
  const double h = 2.0 * std::numbers::pi * winding / static_cast<double>(grid);
  return kStabilityFactor * h * h / static_cast<double>(k);
}

std::vector<std::string> validate_params(const FlowParams& params, int winding) {
  auto reject = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (params.k < 1) reject("k must be >= 1");
  if (winding < 1) reject("winding number m must be >= 1");
  if (params.grid < kMinGrid || params.grid % 2 != 0) reject("grid must be even and >= 16");
  if (params.grid % (2 * static_cast<std::size_t>(params.k)) != 0)
    reject("grid " + std::to_string(params.grid) + " is not divisible by 2k = " + std::to_string(2 * params.k));
  if (!(params.dt > 0.0)) reject("dt must be > 0");
  if (!(params.t_end > 0.0)) reject("t_end must be > 0");
  if (!(params.snapshot_interval > 0.0)) reject("snapshot_interval must be > 0");
  if (params.series_interval < 0.0) reject("series_interval must be >= 0");
  if (params.width_tolerance < 0.0) reject("width_tolerance must be >= 0");
  if (params.solver == SolverKind::FiniteDifference) {
    const double bound = fd_stable_dt(winding, params.grid, params.k);
    if (params.dt > bound * (1.0 + kStepSlack))
      throw Error(ErrorCode::StabilityViolation, "dt = " + fmt_double(params.dt) +
                                                     " exceeds the explicit stability bound " + fmt_double(bound));
  }
  std::vector<std::string> warnings;
  if (params.k == 1) warnings.emplace_back("k = 1: w_1 = p and rho_1 = rho; the flow is intended for k >= 2");
  return warnings;
}

double mode_decay_rate(int n, int winding, int k) {
  const double freq = static_cast<double>(n) / winding;
  return k * (freq * freq + 1.0);
}

FlowState initial_state(const SupportSamples& p, int k) {
  if (!is_admissible(p))
    throw Error(ErrorCode::NotConvex, "initial curve is not admissible: min rho = " +
                                          fmt_double(is_locally_convex(p).min_rho));
  auto rho = rho_from_p(p);
  auto rho_k = k_shift_sum(rho, k);
  auto w_k = k_shift_sum(p, k);
  const double f = nonlocal_f(rho, rho_k);
  const double energy0 = elastic_energy_from_rho(rho);
  auto offset_rho = rho_k - rho * static_cast<double>(k);
  auto offset_p = p - w_k * (1.0 / k);
  return {k,     0.0, p, std::move(rho), std::move(rho_k), std::move(w_k), f, energy0, std::move(offset_rho),
          std::move(offset_p)};
}

FlowState state_from_support(const FlowState& reference, SupportSamples p, double t) {
  auto rho = rho_from_p(p);
  auto rho_k = k_shift_sum(rho, reference.k);
  auto w_k = k_shift_sum(p, reference.k);
  const double f = nonlocal_f(rho, rho_k);
  return {reference.k, t, std::move(p), std::move(rho), std::move(rho_k), std::move(w_k), f, reference.energy0,
          reference.offset_rho, reference.offset_p};
}

double nonlocal_f(const SupportSamples& rho, const SupportSamples& rho_k) {
  return nonlocal_f_values(rho.values(), rho_k.values(), rho.winding());
}

double nonlocal_f(const FlowState& state) { return nonlocal_f(state.rho, state.rho_k); }

SupportSamples normal_speed(const FlowState& state) {
  return (state.w_k * 2.0 - state.rho_k).plus(nonlocal_f(state));
}

SupportSamples tangential_speed(const FlowState& state) {
  return spectral_derivative(state.rho_k, 1) - spectral_derivative(state.w_k, 1) * 2.0;
}

FlowState fd_step(const FlowState& state, double dt, double convexity_guard) {
  const int m = state.p.winding();
  const std::size_t grid = state.p.size();
  const double bound = fd_stable_dt(m, grid, state.k);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "fd_step: dt must be > 0");
  if (dt > bound * (1.0 + kStepSlack))
    throw Error(ErrorCode::StabilityViolation,
                "fd_step: dt = " + fmt_double(dt) + " exceeds the stability bound " + fmt_double(bound));

  const Fields y{Values(state.p.values().begin(), state.p.values().end()),
                 Values(state.rho_k.values().begin(), state.rho_k.values().end()),
                 Values(state.w_k.values().begin(), state.w_k.values().end()),
                 Values(state.rho.values().begin(), state.rho.values().end())};
  const int k = state.k;
  const Fields k1 = system_rhs(y, m, k);
  const Fields k2 = system_rhs(axpy(y, dt / 2.0, k1), m, k);
  const Fields k3 = system_rhs(axpy(y, dt / 2.0, k2), m, k);
  const Fields k4 = system_rhs(axpy(y, dt, k3), m, k);

  Fields next = y;
  auto combine = [dt](Values& dst, const Values& a, const Values& b, const Values& c, const Values& d) {
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]);
  };
  combine(next.p, k1.p, k2.p, k3.p, k4.p);
  combine(next.rho_k, k1.rho_k, k2.rho_k, k3.rho_k, k4.rho_k);
  combine(next.w_k, k1.w_k, k2.w_k, k3.w_k, k4.w_k);
  combine(next.rho, k1.rho, k2.rho, k3.rho, k4.rho);

  check_guard(min_of(next.rho), convexity_guard, "fd_step");
  const double f = nonlocal_f_values(next.rho, next.rho_k, m);
  return {k,
          state.t + dt,
          SupportSamples(m, std::move(next.p)),
          SupportSamples(m, std::move(next.rho)),
          SupportSamples(m, std::move(next.rho_k)),
          SupportSamples(m, std::move(next.w_k)),
          f,
          state.energy0,
          state.offset_rho,
          state.offset_p};
}

SpectralState spectral_state_from(const SupportSamples& p, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const auto spectrum = analyze(p);
  SpectralState s;
  s.winding = p.winding();
  s.k = k;
  s.t = 0.0;
  s.a0 = spectrum.a0;
  for (const auto& md : spectrum.modes) {
    if (md.n % k == 0)
      s.decaying.push_back(md);
    else
      s.frozen.push_back(md);
  }
  return s;
}

FourierSupport spectral_support(const SpectralState& state) {
  FourierSupport out;
  out.winding = state.winding;
  out.a0 = state.a0;
  for (const auto& md : state.decaying) {
    const double factor = std::exp(-mode_decay_rate(md.n, state.winding, state.k) * state.t);
    out.modes.push_back({md.n, md.a * factor, md.b * factor});
  }
  for (const auto& md : state.frozen) out.modes.push_back(md);
  std::sort(out.modes.begin(), out.modes.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  return out;
}

SupportSamples spectral_samples(const SpectralState& state, std::size_t grid) {
  return {state.winding, spectral::inverse(spectral_coefficients(state, state.t, state.a0, grid), grid)};
}

SpectralState spectral_evolve(const SpectralState& initial, double t_target, const SpectralOptions& options) {
  if (t_target < initial.t) throw Error(ErrorCode::InvalidArgument, "spectral_evolve: t_target precedes state time");
  if (!(options.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "spectral_evolve: dt must be > 0");
  const std::size_t grid = options.grid;
  const int m = initial.winding;
  const int k = initial.k;

  // a0' = -k a0 - 2 f(t), with f evaluated on the synthesized stage state.
  auto a0_rate = [&](double t, double a0) {
    auto c = spectral_coefficients(initial, t, a0, grid);
    for (std::size_t n = 0; n < c.size(); ++n) {
      const double freq = static_cast<double>(n) / m;
      c[n] *= 1.0 - freq * freq;
    }
    const Values rho = spectral::inverse(c, grid);
    check_guard(min_of(rho), options.convexity_guard, "spectral_evolve");
    const Values rho_k = shift_sum(rho, k);
    return -k * a0 - 2.0 * nonlocal_f_values(rho, rho_k, m);
  };

  // Modes that have decayed below roundoff no longer constrain the step.
  double scale = std::abs(initial.a0);
  for (const auto& md : initial.decaying) scale = std::max(scale, std::hypot(md.a, md.b));
  auto fastest_active_rate = [&](double t) {
    double fastest = k;
    for (const auto& md : initial.decaying) {
      const double rate = mode_decay_rate(md.n, m, k);
      if (std::hypot(md.a, md.b) * std::exp(-rate * t) > 1e-16 * scale) fastest = std::max(fastest, rate);
    }
    return fastest;
  };

  SpectralState s = initial;
  const double eps = 1e-14 * std::max(1.0, std::abs(t_target));
  while (t_target - s.t > eps) {
    const double t = s.t;
    const double h = std::min({options.dt, kSpectralStepFactor / fastest_active_rate(t), t_target - t});
    const double k1 = a0_rate(t, s.a0);
    const double k2 = a0_rate(t + h / 2.0, s.a0 + h / 2.0 * k1);
    const double k3 = a0_rate(t + h / 2.0, s.a0 + h / 2.0 * k2);
    const double k4 = a0_rate(t + h, s.a0 + h * k3);
    s.a0 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s.t = t + h;
  }
  s.t = t_target;
  return s;
}

LambdaSolution lambda_solve(const FlowState& initial, double t_target, double convexity_guard) {
  const double tau = t_target - initial.t;
  if (tau < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda_reconstruct: t_target precedes initial time");
  const int m = initial.p.winding();
  const int k = initial.k;
  const std::size_t grid = initial.p.size();
  const std::size_t nyquist = grid / 2;
  const double h = initial.p.spacing();
  const double kk = k;

  // eta_k solves eta_t = k (eta'' - eta): mode n decays by exp(-k (n^2/m^2 + 1) tau).
  const Values eta0 = spectral::derivative(initial.rho_k.values(), m, 1);
  auto eta = spectral::forward(eta0);
  for (std::size_t n = 0; n <= nyquist; ++n) {
    const double freq = static_cast<double>(n) / m;
    eta[n] *= std::exp(-kk * (freq * freq + 1.0) * tau);
  }
  // Periodic antiderivative; eta has zero mean and no Nyquist content.
  std::vector<spectral::Complex> anti(nyquist + 1, 0.0);
  for (std::size_t n = 1; n < nyquist; ++n) {
    const double freq = static_cast<double>(n) / m;
    anti[n] = eta[n] / spectral::Complex(0.0, freq);
  }
  const Values antiderivative = spectral::inverse(anti, grid);
  // integral_0^theta eta_k minus the conserved offset rho_k(., 0) - k rho(., 0).
  Values base(grid);
  for (std::size_t j = 0; j < grid; ++j)
    base[j] = antiderivative[j] - antiderivative[0] - initial.offset_rho[j];

  auto energy_of = [&](double lambda) {
    double sum = 0.0;
    for (double b : base) sum += h / (b + lambda);
    return kk * sum;
  };

  const double lambda_lo = convexity_guard - min_of(base) + 1e-12;
  const double lambda_hi = lambda_lo + 10.0 * kk * initial.rho.max();
  const double target = initial.energy0;
  if (!(energy_of(lambda_lo) >= target) || !(energy_of(lambda_hi) <= target))
    throw Error(ErrorCode::BracketFailure,
                "lambda_reconstruct: energy identity has no root in [" + fmt_double(lambda_lo) + ", " +
                    fmt_double(lambda_hi) + "]");
  double lo = lambda_lo;
  double hi = lambda_hi;
  for (int iter = 0; iter < 400 && hi - lo > 1e-13 * std::abs(hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (energy_of(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);

  Values rho_k(grid);
  Values rho(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    rho_k[j] = antiderivative[j] - antiderivative[0] + lambda;
    rho[j] = (rho_k[j] - initial.offset_rho[j]) / kk;
  }
  check_guard(min_of(rho), convexity_guard, "lambda_reconstruct");

  // w_k from rho_k = w_k + w_k''. The translation mode n = m lies in the kernel
  // of that operator and, like the Nyquist mode, follows its exact decay law.
  auto rho_k_hat = spectral::forward(rho_k);
  const auto w_k0_hat = spectral::forward(initial.w_k.values());
  std::vector<spectral::Complex> w_hat(nyquist + 1);
  for (std::size_t n = 0; n <= nyquist; ++n) {
    const double freq = static_cast<double>(n) / m;
    const double symbol = 1.0 - freq * freq;
    if (n == static_cast<std::size_t>(m) || n == nyquist)
      w_hat[n] = w_k0_hat[n] * std::exp(-kk * (freq * freq + 1.0) * tau);
    else
      w_hat[n] = rho_k_hat[n] / symbol;
  }
  Values w_k = spectral::inverse(w_hat, grid);
  Values p(grid);
  for (std::size_t j = 0; j < grid; ++j) p[j] = initial.offset_p[j] + w_k[j] / kk;

  const double f = nonlocal_f_values(rho, rho_k, m);
  FlowState state{k,
                  t_target,
                  SupportSamples(m, std::move(p)),
                  SupportSamples(m, std::move(rho)),
                  SupportSamples(m, std::move(rho_k)),
                  SupportSamples(m, std::move(w_k)),
                  f,
                  initial.energy0,
                  initial.offset_rho,
                  initial.offset_p};
  return {std::move(state), lambda};
}

FlowState lambda_reconstruct(const FlowState& initial, double t_target, double convexity_guard) {
  return lambda_solve(initial, t_target, convexity_guard).state;
}

SeriesRow series_row(const FlowState& state) {
  SeriesRow row{};
  row.t = state.t;
  row.energy = elastic_energy_from_rho(state.rho);
  row.f = state.f;
  row.a0 = 2.0 * state.p.integrate() / (2.0 * std::numbers::pi * state.p.winding());
  row.min_rho = state.rho.min();
  row.max_rho = state.rho.max();
  row.width_defect = state.w_k.max() - state.w_k.min();
  row.symmetry_defect = symmetry_defect(state.p, state.k);
  const auto grad = spectral_derivative(state.rho_k, 1);
  for (double g : grad.values()) row.grad_rho_k_max = std::max(row.grad_rho_k_max, std::abs(g));
  const double kk = state.k;
  for (std::size_t j = 0; j < state.p.size(); ++j) {
    row.drift_rho_offset = std::max(
        row.drift_rho_offset, std::abs(state.rho_k[j] - kk * state.rho[j] - state.offset_rho[j]));
    row.drift_p_offset =
        std::max(row.drift_p_offset, std::abs(state.p[j] - state.w_k[j] / kk - state.offset_p[j]));
  }
  return row;
}

Trajectory run_flow(const FlowParams& params, const SupportSamples& initial) {
  Trajectory traj;
  traj.params = params;
  traj.warnings = validate_params(params, initial.winding());
  if (initial.size() != params.grid)
    throw Error(ErrorCode::ConfigError, "initial samples have " + std::to_string(initial.size()) +
                                            " points but grid = " + std::to_string(params.grid));

  const FlowState start = initial_state(initial, params.k);
  const double guard =
      params.convexity_guard > 0.0 ? params.convexity_guard : kDefaultGuardFraction * start.rho.max();
  traj.convexity_guard = guard;

  SpectralState spectral_state;
  if (params.solver == SolverKind::Spectral) spectral_state = spectral_state_from(initial, params.k);
  const SpectralOptions spectral_options{params.grid, params.dt, guard};

  auto advance = [&](const FlowState& current, double t_next) -> FlowState {
    switch (params.solver) {
      case SolverKind::Spectral:
        spectral_state = spectral_evolve(spectral_state, t_next, spectral_options);
        return state_from_support(start, spectral_samples(spectral_state, params.grid), t_next);
      case SolverKind::FiniteDifference:
        return fd_step(current, t_next - current.t, guard);
      case SolverKind::LambdaReconstruction:
        return lambda_reconstruct(start, t_next, guard);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown solver");
  };

  auto converged = [&](const FlowState& s) {
    return params.width_tolerance > 0.0 && s.w_k.max() - s.w_k.min() < params.width_tolerance;
  };

  FlowState state = start;
  traj.snapshots.push_back(state);
  traj.series.push_back(series_row(state));
  std::size_t snapshot_index = 1;
  std::size_t series_index = 1;
  const double eps = 1e-12 * std::max(1.0, params.t_end);
  traj.converged = converged(state);

  while (!traj.converged && params.t_end - state.t > eps) {
    const double next_snapshot = static_cast<double>(snapshot_index) * params.snapshot_interval;
    double t_next = std::min({state.t + params.dt, params.t_end, next_snapshot});
    // Avoid a sliver step right before a snapshot or the horizon.
    if (std::min(params.t_end, next_snapshot) - t_next < eps) t_next = std::min(params.t_end, next_snapshot);
    try {
      state = advance(state, t_next);
      state.t = t_next;
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " [at t = " + fmt_double(t_next) + "]");
    }
    traj.converged = converged(state);
    const bool at_end = traj.converged || params.t_end - state.t <= eps;

    if (params.series_interval <= 0.0 ||
        state.t >= static_cast<double>(series_index) * params.series_interval - eps || at_end) {
      traj.series.push_back(series_row(state));
      while (params.series_interval > 0.0 &&
             static_cast<double>(series_index) * params.series_interval <= state.t + eps)
        ++series_index;
    }
    if (state.t >= next_snapshot - eps || at_end) {
      traj.snapshots.push_back(state);
      while (static_cast<double>(snapshot_index) * params.snapshot_interval <= state.t + eps) ++snapshot_index;
    }
  }
  traj.t_final = state.t;
  return traj;
}

}  // namespace kflow
