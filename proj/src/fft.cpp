#include "sqg/fft.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace sqg {

namespace {

// Twiddle tables per transform length. References stay valid under rehash, so
// the lock only guards the lookup itself.
const std::vector<cplx>& twiddles(std::size_t n) {
    static std::unordered_map<std::size_t, std::vector<cplx>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        w[k] = {std::cos(a), std::sin(a)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

} // namespace

void fft_inplace(cplx* data, std::size_t n, bool inverse) {
    if (!is_pow2(n)) throw std::invalid_argument("fft_inplace: length must be a power of two");
    if (n <= 1) return;

    // Bit reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    const std::vector<cplx>& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx tw = w[k * step];
                if (inverse) tw = std::conj(tw);
                cplx a = data[i + k];
                cplx b = data[i + k + len / 2] * tw;
                data[i + k] = a + b;
                data[i + k + len / 2] = a - b;
            }
        }
    }
    if (inverse) {
        double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) data[i] *= inv;
    }
}

void fft2_inplace(cplx* data, std::size_t nx, std::size_t ny, bool inverse) {
    for (std::size_t row = 0; row < ny; ++row) fft_inplace(data + row * nx, nx, inverse);
    std::vector<cplx> col(ny);
    for (std::size_t cx = 0; cx < nx; ++cx) {
        for (std::size_t row = 0; row < ny; ++row) col[row] = data[row * nx + cx];
        fft_inplace(col.data(), ny, inverse);
        for (std::size_t row = 0; row < ny; ++row) data[row * nx + cx] = col[row];
    }
}

std::vector<cplx> dft_forward(const std::vector<double>& real_field, std::size_t nx, std::size_t ny) {
    std::vector<cplx> out(nx * ny);
    for (std::size_t i = 0; i < nx * ny; ++i) out[i] = real_field[i];
    fft2_inplace(out.data(), nx, ny, false);
    double inv = 1.0 / static_cast<double>(nx * ny);
    for (auto& c : out) c *= inv;
    return out;
}

std::vector<double> dft_inverse(std::vector<cplx> coeff, std::size_t nx, std::size_t ny) {
    // The convention above folds 1/N^2 into the forward transform, so the
    // synthesis direction is the raw un-normalized FFT with conjugate twiddles.
    fft2_inplace(coeff.data(), nx, ny, true);
    double scale = static_cast<double>(nx * ny);
    std::vector<double> out(nx * ny);
    for (std::size_t i = 0; i < nx * ny; ++i) out[i] = coeff[i].real() * scale;
    return out;
}

double dft_inverse_imag_residue(const std::vector<cplx>& coeff, std::size_t nx, std::size_t ny) {
    std::vector<cplx> tmp = coeff;
    fft2_inplace(tmp.data(), nx, ny, true);
    double scale = static_cast<double>(nx * ny);
    double m = 0.0;
    for (const auto& c : tmp) m = std::max(m, std::abs(c.imag()) * scale);
    return m;
}

} // namespace sqg
