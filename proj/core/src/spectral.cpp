#include "kflow/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "kflow/error.hpp"

namespace kflow::spectral {
namespace {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per grid size and live for the process lifetime.
const Plans& plans_for(std::size_t grid) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(grid);
  if (it != cache.end()) return it->second;

  const int n = static_cast<int>(grid);
  double* real = fftw_alloc_real(grid);
  fftw_complex* cplx = fftw_alloc_complex(grid / 2 + 1);
  Plans plans;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans.r2c = fftw_plan_dft_r2c_1d(n, real, cplx, flags);
  plans.c2r = fftw_plan_dft_c2r_1d(n, cplx, real, flags | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(cplx);
  if (plans.r2c == nullptr || plans.c2r == nullptr)
    throw Error(ErrorCode::InvalidArgument, "FFT planning failed for grid size " + std::to_string(grid));
  return cache.emplace(grid, plans).first->second;
}

}  // namespace

std::vector<Complex> forward(std::span<const double> values) {
  const std::size_t grid = values.size();
  if (grid < 2 || grid % 2 != 0)
    throw Error(ErrorCode::InvalidArgument, "FFT grid size must be even and >= 2");
  const Plans& plans = plans_for(grid);

  std::vector<double> input(values.begin(), values.end());
  std::vector<Complex> out(grid / 2 + 1);
  fftw_execute_dft_r2c(plans.r2c, input.data(), reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(grid);
  for (auto& c : out) c *= scale;
  return out;
}

std::vector<double> inverse(std::span<const Complex> coeffs, std::size_t grid) {
  if (grid < 2 || grid % 2 != 0 || coeffs.size() != grid / 2 + 1)
    throw Error(ErrorCode::InvalidArgument, "inverse FFT: coefficient count does not match grid");
  const Plans& plans = plans_for(grid);

  // c2r overwrites its input.
  std::vector<Complex> input(coeffs.begin(), coeffs.end());
  // Imaginary parts of the DC and Nyquist entries have no real-signal meaning.
  input.front().imag(0.0);
  input.back().imag(0.0);
  std::vector<double> out(grid);
  fftw_execute_dft_c2r(plans.c2r, reinterpret_cast<fftw_complex*>(input.data()), out.data());
  return out;
}

std::vector<double> derivative(std::span<const double> values, int winding, int order) {
  auto coeffs = forward(values);
  const std::size_t nyquist = values.size() / 2;
  const double m = winding;
  for (std::size_t n = 0; n <= nyquist; ++n) {
    if (n == nyquist && order % 2 == 1) {
      coeffs[n] = 0.0;
      continue;
    }
    const double freq = static_cast<double>(n) / m;
    // (i freq)^order
    Complex factor(1.0, 0.0);
    for (int q = 0; q < order; ++q) factor *= Complex(0.0, freq);
    coeffs[n] *= factor;
  }
  return inverse(coeffs, values.size());
}

}  // namespace kflow::spectral
