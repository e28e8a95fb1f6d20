#include "sqg/field.hpp"

#include <cmath>
#include <stdexcept>

namespace sqg {

PeriodicField PeriodicField::from_values(std::size_t nx, std::size_t ny, std::vector<double> v) {
    if (v.size() != nx * ny) throw std::invalid_argument("PeriodicField: size mismatch");
    PeriodicField f(nx, ny);
    f.values_ = std::move(v);
    return f;
}

PeriodicField PeriodicField::from_spectrum(std::size_t nx, std::size_t ny, std::vector<cplx> coeff) {
    if (coeff.size() != nx * ny) throw std::invalid_argument("PeriodicField: size mismatch");
    PeriodicField f(nx, ny);
    f.values_ = dft_inverse(coeff, nx, ny);
    f.spectrum_ = std::move(coeff);
    f.spectrum_valid_ = true;
    return f;
}

const std::vector<cplx>& PeriodicField::spectrum() const {
    if (!spectrum_valid_) {
        spectrum_ = dft_forward(values_, nx_, ny_);
        spectrum_valid_ = true;
    }
    return spectrum_;
}

cplx PeriodicField::coeff(int kx, int ky) const {
    const auto& s = spectrum();
    std::size_t ix = static_cast<std::size_t>((kx % static_cast<int>(nx_) + nx_) % nx_);
    std::size_t iy = static_cast<std::size_t>((ky % static_cast<int>(ny_) + ny_) % ny_);
    return s[ix + nx_ * iy];
}

double PeriodicField::mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
}

double PeriodicField::l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s / static_cast<double>(values_.size()));
}

double PeriodicField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double PeriodicField::reality_residue() const {
    return dft_inverse_imag_residue(spectrum(), nx_, ny_);
}

PeriodicField& PeriodicField::operator+=(const PeriodicField& o) {
    spectrum_valid_ = false;
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

PeriodicField& PeriodicField::operator-=(const PeriodicField& o) {
    spectrum_valid_ = false;
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

PeriodicField& PeriodicField::operator*=(double c) {
    spectrum_valid_ = false;
    for (auto& v : values_) v *= c;
    return *this;
}

PeriodicField operator-(const PeriodicField& a, const PeriodicField& b) {
    PeriodicField r = a;
    r -= b;
    return r;
}

PeriodicField operator+(const PeriodicField& a, const PeriodicField& b) {
    PeriodicField r = a;
    r += b;
    return r;
}

PeriodicField PeriodicField::pointwise(const PeriodicField& a, const PeriodicField& b) {
    PeriodicField r(a.nx_, a.ny_);
    for (std::size_t i = 0; i < r.values_.size(); ++i) r.values_[i] = a.values_[i] * b.values_[i];
    return r;
}

PeriodicField torus_convolve(const PeriodicField& f, const PeriodicField& g) {
    if (f.nx() != g.nx() || f.ny() != g.ny())
        throw std::invalid_argument("torus_convolve: grid mismatch");
    std::vector<cplx> c = f.spectrum();
    const std::vector<cplx>& d = g.spectrum();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= d[i];
    return PeriodicField::from_spectrum(f.nx(), f.ny(), std::move(c));
}

} // namespace sqg
