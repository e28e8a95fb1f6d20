#pragma once

#include <array>
#include <ostream>
#include <string>

#include "sqg/rational.hpp"

namespace sqg {

/// Degree of a symbol as an exact linear form  c + q*mu + r*kappa.
/// Kept symbolic so threshold and sign decisions are made in exact arithmetic
/// and only evaluated to double at presentation boundaries.
struct Homogeneity {
    Rational const_part{0};
    Rational mu_coeff{0};
    Rational kappa_coeff{0};

    Rational eval(const Rational& mu, const Rational& kappa) const {
        return const_part + mu_coeff * mu + kappa_coeff * kappa;
    }
    double eval(double mu, double kappa) const {
        return const_part.to_double() + mu_coeff.to_double() * mu + kappa_coeff.to_double() * kappa;
    }

    friend Homogeneity operator+(const Homogeneity& a, const Homogeneity& b) {
        return {a.const_part + b.const_part, a.mu_coeff + b.mu_coeff, a.kappa_coeff + b.kappa_coeff};
    }
    Homogeneity& operator+=(const Homogeneity& o) { return *this = *this + o; }

    friend bool operator==(const Homogeneity& a, const Homogeneity& b) {
        return a.const_part == b.const_part && a.mu_coeff == b.mu_coeff && a.kappa_coeff == b.kappa_coeff;
    }
    friend bool operator!=(const Homogeneity& a, const Homogeneity& b) { return !(a == b); }

    /// Rendered like "-2-2k+2m" with mu as m, kappa as k, constant first.
    std::string str() const;
};

/// Space-time multi-index (k0 time, k1/k2 space) under the scaling (2*mu,1,1):
/// the scaled degree |k|_s = 2*mu*k0 + k1 + k2 is the Homogeneity (k1+k2, 2*k0, 0).
struct MultiIndex {
    int k0 = 0;
    int k1 = 0;
    int k2 = 0;

    Homogeneity scaled_degree() const {
        return {Rational(k1 + k2), Rational(2 * static_cast<std::int64_t>(k0)), Rational(0)};
    }
    int plain_degree() const { return k0 + k1 + k2; }
    bool is_zero() const { return k0 == 0 && k1 == 0 && k2 == 0; }

    friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
        return {a.k0 + b.k0, a.k1 + b.k1, a.k2 + b.k2};
    }
    friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
        return a.k0 == b.k0 && a.k1 == b.k1 && a.k2 == b.k2;
    }
    friend bool operator<(const MultiIndex& a, const MultiIndex& b) {
        return std::array<int, 3>{a.k0, a.k1, a.k2} < std::array<int, 3>{b.k0, b.k1, b.k2};
    }

    std::string str() const {
        return "(" + std::to_string(k0) + "," + std::to_string(k1) + "," + std::to_string(k2) + ")";
    }
};

inline std::string Homogeneity::str() const {
    auto term = [](const Rational& r, const char* sym, bool leading) -> std::string {
        if (r.sign() == 0) return "";
        std::string out;
        if (r.sign() > 0 && !leading) out += "+";
        if (r == Rational(-1) && *sym) out += "-";
        else if (r == Rational(1) && *sym) { /* bare symbol */ }
        else out += r.str();
        out += sym;
        return out;
    };
    std::string s = term(const_part, "", true);
    bool lead = s.empty();
    s += term(kappa_coeff, "k", lead);
    lead = s.empty();
    s += term(mu_coeff, "m", lead);
    return s.empty() ? "0" : s;
}

inline std::ostream& operator<<(std::ostream& os, const Homogeneity& h) { return os << h.str(); }

} // namespace sqg
