#pragma once

#include <cmath>
#include <functional>
#include <string>

namespace sqg {

/// Smooth compactly supported profiles used for probing and mollification.
/// All profiles vanish outside the unit ball of their argument.

/// C^infinity bump e^{-1/(1-s)} for s in [0,1), normalized to 1 at s=0.
inline double smooth_bump_arg(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s));
}

/// Spatial probe profile phi(y) on |y|<1 (C^infinity, even, positive).
inline double probe_profile(double y1, double y2) {
    return smooth_bump_arg(y1 * y1 + y2 * y2);
}
inline double probe_profile_d1(double y1, double y2) {
    double s = y1 * y1 + y2 * y2;
    if (s >= 1.0) return 0.0;
    double d = 1.0 - s;
    return smooth_bump_arg(s) * (-2.0 * y1) / (d * d);
}
inline double probe_profile_d2(double y1, double y2) {
    double s = y1 * y1 + y2 * y2;
    if (s >= 1.0) return 0.0;
    double d = 1.0 - s;
    return smooth_bump_arg(s) * (-2.0 * y2) / (d * d);
}

/// Even, smooth, unit-mass space-time mollifier profile supported in the
/// parabolic unit ball (|t|<=1, |x|<=1). Two shapes are provided so mollifier
/// independence can be probed; both factorize as b0(t^2) b2(|x|^2).
class MollifierProfile {
public:
    enum class Shape { Exponential, PolynomialC3 };

    explicit MollifierProfile(Shape shape = Shape::Exponential) : shape_(shape) {
        // Unit mass: the profile factorizes, so two 1D quadratures suffice.
        const int n = 4000;
        double tmass = 0.0, smass = 0.0;
        for (int i = 0; i < n; ++i) {
            double t = -1.0 + (i + 0.5) * (2.0 / n);
            tmass += time_part(t * t) * (2.0 / n);
            double r = (i + 0.5) * (1.0 / n);
            smass += space_part(r * r) * (2.0 * M_PI * r) * (1.0 / n);
        }
        norm_ = 1.0 / (tmass * smass);
    }

    double operator()(double t, double x1, double x2) const {
        double r2 = x1 * x1 + x2 * x2;
        if (std::abs(t) >= 1.0 || r2 >= 1.0) return 0.0;
        return norm_ * time_part(t * t) * space_part(r2);
    }
    Shape shape() const { return shape_; }
    std::string name() const {
        return shape_ == Shape::Exponential ? "exponential" : "polynomial";
    }

    /// Unit-mass normalization constant, computed once by quadrature.
    double normalization() const { return norm_; }

private:
    double time_part(double t2) const {
        return shape_ == Shape::Exponential ? smooth_bump_arg(t2) : cube(1.0 - t2) * (1.0 - t2);
    }
    double space_part(double r2) const {
        return shape_ == Shape::Exponential ? smooth_bump_arg(r2) : cube(1.0 - r2) * (1.0 - r2);
    }
    static double cube(double v) { return v * v * v; }

    Shape shape_;
    double norm_ = 1.0;
};

/// The mollifier at scale eps. Under the ambient scaling (s0,1,1) the profile
/// contracts as eps^{-(s0+2)} rho(t/eps^{s0}, x/eps); the literal (2,1,1)
/// contraction eps^{-4} rho(t/eps^2, x/eps) is kept as an option.
struct Mollifier {
    MollifierProfile profile;
    double eps = 0.125;
    double s0 = 2.0;             // time contraction exponent
    bool literal_parabolic2 = false;

    double time_scale() const { return literal_parabolic2 ? eps * eps : std::pow(eps, s0); }
    double amplitude() const {
        return literal_parabolic2 ? std::pow(eps, -4.0) : std::pow(eps, -(s0 + 2.0));
    }
    double operator()(double t, double x1, double x2) const {
        double ts = time_scale();
        return amplitude() * profile(t / ts, x1 / eps, x2 / eps);
    }
};

} // namespace sqg
