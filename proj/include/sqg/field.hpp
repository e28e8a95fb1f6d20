#pragma once

#include <vector>

#include "sqg/fft.hpp"

namespace sqg {

/// Real-valued function on the uniform nx*ny grid of the unit torus, with a
/// lazily cached spectral view. Sample (ix,iy) sits at x=(ix/nx, iy/ny) and is
/// stored row-major, index ix + nx*iy.
class PeriodicField {
public:
    PeriodicField() = default;
    PeriodicField(std::size_t nx, std::size_t ny)
        : nx_(nx), ny_(ny), values_(nx * ny, 0.0) {}
    static PeriodicField from_values(std::size_t nx, std::size_t ny, std::vector<double> v);
    static PeriodicField from_spectrum(std::size_t nx, std::size_t ny, std::vector<cplx> coeff);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return values_.size(); }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { spectrum_valid_ = false; return values_; }
    double operator()(std::size_t ix, std::size_t iy) const { return values_[ix + nx_ * iy]; }
    double& at(std::size_t ix, std::size_t iy) { spectrum_valid_ = false; return values_[ix + nx_ * iy]; }

    /// Coefficients of f(x) = sum_k coeff(k) e^{2*pi*i*k.x}; cached.
    const std::vector<cplx>& spectrum() const;
    cplx coeff(int kx, int ky) const;

    double mean() const;
    double l2_norm() const;     // sqrt of the domain integral of f^2
    double max_abs() const;
    /// Largest imaginary residue if the cached spectrum were synthesized back.
    double reality_residue() const;

    PeriodicField& operator+=(const PeriodicField& o);
    PeriodicField& operator-=(const PeriodicField& o);
    PeriodicField& operator*=(double c);
    friend PeriodicField operator-(const PeriodicField& a, const PeriodicField& b);
    friend PeriodicField operator+(const PeriodicField& a, const PeriodicField& b);

    /// Pointwise product of grid values.
    static PeriodicField pointwise(const PeriodicField& a, const PeriodicField& b);

private:
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<double> values_;
    mutable std::vector<cplx> spectrum_;
    mutable bool spectrum_valid_ = false;
};

/// Applies a multiplier m(kx,ky) in the spectral domain and returns the real field.
template <typename M>
PeriodicField apply_multiplier(const PeriodicField& f, M&& m) {
    std::vector<cplx> coeff = f.spectrum();
    std::size_t nx = f.nx(), ny = f.ny();
    for (std::size_t iy = 0; iy < ny; ++iy) {
        int ky = signed_mode(iy, ny);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            int kx = signed_mode(ix, nx);
            coeff[ix + nx * iy] *= m(kx, ky);
        }
    }
    return PeriodicField::from_spectrum(nx, ny, std::move(coeff));
}

/// Torus convolution (f*g)(x) = \int f(y) g(x-y) dy, i.e. coefficient product.
PeriodicField torus_convolve(const PeriodicField& f, const PeriodicField& g);

/// Wrapped displacement of grid node i relative to center c, in (-1/2, 1/2].
inline double wrapped_delta(std::size_t i, double center, std::size_t n) {
    double d = static_cast<double>(i) / static_cast<double>(n) - center;
    d -= std::floor(d + 0.5);
    return d;
}

} // namespace sqg
