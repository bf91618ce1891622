#pragma once

#include <complex>
#include <span>
#include <vector>

namespace kflow::spectral {

using Complex = std::complex<double>;

/// One-sided normalized spectrum of a real periodic signal of even length G:
/// entries c_0 .. c_{G/2}, such that v_j = sum_n c_n exp(2 pi i n j / G) over
/// the full two-sided index range with c_{-n} = conj(c_n).
std::vector<Complex> forward(std::span<const double> values);

/// Inverse of `forward`. `grid` must equal 2 * (coeffs.size() - 1).
std::vector<double> inverse(std::span<const Complex> coeffs, std::size_t grid);

/// order-th derivative of samples over a period of length 2 pi * winding.
/// Mode n has angular frequency n / winding; odd orders zero the Nyquist mode.
std::vector<double> derivative(std::span<const double> values, int winding, int order);

}  // namespace kflow::spectral
