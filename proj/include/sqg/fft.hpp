#pragma once

#include <complex>
#include <vector>

namespace sqg {

using cplx = std::complex<double>;

/// In-place radix-2 complex FFT. Lengths must be powers of two.
/// Forward transform uses e^{-2*pi*i*k*j/N} without normalization; the inverse
/// applies the 1/N factor, so ifft(fft(x)) == x.
void fft_inplace(cplx* data, std::size_t n, bool inverse);

/// Row-major 2D transform (ny rows of length nx).
void fft2_inplace(cplx* data, std::size_t nx, std::size_t ny, bool inverse);

/// Forward DFT of a real nx*ny field into coefficients normalized so that
/// f(x_j) = sum_k coeff(k) e^{2*pi*i*k*x_j}; storage index (kx mod nx, ky mod ny).
std::vector<cplx> dft_forward(const std::vector<double>& real_field, std::size_t nx, std::size_t ny);

/// Inverse of dft_forward; discards the imaginary residue (callers assert on it).
std::vector<double> dft_inverse(std::vector<cplx> coeff, std::size_t nx, std::size_t ny);

/// Largest imaginary magnitude left by an inverse transform of Hermitian data.
double dft_inverse_imag_residue(const std::vector<cplx>& coeff, std::size_t nx, std::size_t ny);

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Signed mode index for storage slot i of an n-point grid: 0,1,..,n/2-1,-n/2,..,-1.
inline int signed_mode(std::size_t i, std::size_t n) {
    return static_cast<int>(i) < static_cast<int>(n / 2) ? static_cast<int>(i)
                                                         : static_cast<int>(i) - static_cast<int>(n);
}

} // namespace sqg
