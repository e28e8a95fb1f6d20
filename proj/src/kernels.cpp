#include "sqg/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace sqg {

namespace {

constexpr double k_two_pi = 2.0 * M_PI;

// Smooth transition: 1 for r <= 1/2, 0 for r >= 1.
double cutoff_profile(double r) {
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    auto s = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    double a = s((1.0 - r) * 2.0);
    double b = s((r - 0.5) * 2.0);
    return a / (a + b);
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
    if (n % 2) ++n;
    double h = (hi - lo) / n;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// (1/2pi) \int_0^umax u^p e^{-u^{2mu}} J_bo(u rho) du
double hankel_profile(double mu, int bessel_order, int u_power, double rho) {
    double umax = std::pow(41.0, 1.0 / (2.0 * mu));
    int n = static_cast<int>(std::max(1200.0, umax * 24.0 * std::max(rho, 1.0) / k_two_pi));
    n = std::min(n, 2000000);
    auto f = [&](double u) {
        return std::pow(u, u_power) * std::exp(-std::pow(u, 2.0 * mu)) *
               std::cyl_bessel_j(bessel_order, u * rho);
    };
    return simpson(f, 0.0, umax, n) / k_two_pi;
}

} // namespace

// --- KernelSpec ---------------------------------------------------------------

double KernelSpec::smoothing() const {
    switch (kind) {
        case KernelKind::FractionalHeat: return 2.0 * mu;
        case KernelKind::HeatDeriv: return 2.0 * mu - 1.0;
        case KernelKind::RieszHeat: return 2.0 * mu;  // R = LG with beta_L = 1, G 1-smoothing
        case KernelKind::RieszComponent: return 0.0;
        case KernelKind::Mollified: return base ? base->smoothing() : 0.0;
    }
    return 0.0;
}

double KernelSpec::order() const {
    double s_total = 2.0 * mu + 2.0;
    switch (kind) {
        case KernelKind::FractionalHeat: return -s_total + 2.0 * mu; // -2
        case KernelKind::HeatDeriv: return -s_total + 2.0 * mu - 1.0; // -3
        case KernelKind::RieszHeat: return -2.0; // same order as the heat kernel
        case KernelKind::RieszComponent: return -2.0; // spatial order -d
        case KernelKind::Mollified: return base ? base->order() : 0.0;
    }
    return 0.0;
}

KernelSpec KernelSpec::clone() const {
    KernelSpec s;
    s.kind = kind;
    s.mu = mu;
    s.dir = dir;
    s.eps = eps;
    s.mollifier = mollifier;
    s.reflected = reflected;
    if (base) s.base = std::make_unique<KernelSpec>(base->clone());
    return s;
}

// --- FullSpaceKernel -----------------------------------------------------------

double FullSpaceKernel::Table::interp(double rho) const {
    constexpr double uni_hi = 4.0, geo_hi = 400.0;
    constexpr int uni_n = 2048;
    if (rho < 0.0) rho = -rho;
    if (rho < uni_hi) {
        double pos = rho / uni_hi * uni_n;
        std::size_t i = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(uni_n - 1));
        double f = pos - i;
        return uniform[i] * (1.0 - f) + uniform[i + 1] * f;
    }
    if (rho < geo_hi) {
        double lr = std::log(rho / uni_hi);
        double step = std::log(geo_hi / uni_hi) / (geometric.size() - 1);
        double pos = lr / step;
        std::size_t i = std::min(static_cast<std::size_t>(pos), geometric.size() - 2);
        double f = pos - i;
        return geometric[i] * (1.0 - f) + geometric[i + 1] * f;
    }
    return tail_amp * std::pow(rho, -tail_exp);
}

FullSpaceKernel::Table FullSpaceKernel::build_table(double mu, int bessel_order, int u_power,
                                                    double tail_exp) {
    Table t;
    constexpr double uni_hi = 4.0, geo_hi = 400.0;
    constexpr int uni_n = 2048, geo_n = 1400;
    t.uniform.resize(uni_n + 1);
    for (int i = 0; i <= uni_n; ++i)
        t.uniform[i] = hankel_profile(mu, bessel_order, u_power, uni_hi * i / uni_n);
    t.geometric.resize(geo_n);
    double step = std::log(geo_hi / uni_hi) / (geo_n - 1);
    for (int i = 0; i < geo_n; ++i)
        t.geometric[i] = hankel_profile(mu, bessel_order, u_power, uni_hi * std::exp(step * i));
    t.tail_exp = tail_exp;
    t.tail_amp = t.geometric.back() * std::pow(geo_hi, tail_exp);
    return t;
}

FullSpaceKernel::FullSpaceKernel(double mu) : mu_(mu) {
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("FullSpaceKernel: mu in (0,1]");
    phi_k_ = build_table(mu, 0, 1, 2.0 + 2.0 * mu);
    phi_r_ = build_table(mu, 1, 1, 2.0);
    phi_kd_ = build_table(mu, 1, 2, 3.0 + 2.0 * mu);
}

double FullSpaceKernel::heat(double t, double x1, double x2) const {
    if (t <= 0.0) return 0.0;
    double rho = std::hypot(x1, x2);
    double lam = std::pow(t, -0.5 / mu_);
    return std::pow(t, -1.0 / mu_) * phi_k_.interp(lam * rho);
}

double FullSpaceKernel::heat_deriv(int j, double t, double x1, double x2) const {
    if (t <= 0.0) return 0.0;
    double rho = std::hypot(x1, x2);
    if (rho == 0.0) return 0.0;
    double lam = std::pow(t, -0.5 / mu_);
    double xr = (j == 1 ? x1 : x2) / rho;
    return -xr * std::pow(t, -1.5 / mu_) * phi_kd_.interp(lam * rho);
}

double FullSpaceKernel::riesz_heat(int i, double t, double x1, double x2) const {
    if (t <= 0.0) return 0.0;
    double rho = std::hypot(x1, x2);
    if (rho == 0.0) return 0.0;
    double lam = std::pow(t, -0.5 / mu_);
    double xr = (i == 1 ? x1 : x2) / rho;
    return -xr * std::pow(t, -1.0 / mu_) * phi_r_.interp(lam * rho);
}

double FullSpaceKernel::eval(const KernelSpec& spec, double t, double x1, double x2) const {
    if (spec.reflected) { t = -t; x1 = -x1; x2 = -x2; }
    switch (spec.kind) {
        case KernelKind::FractionalHeat: return heat(t, x1, x2);
        case KernelKind::HeatDeriv: return heat_deriv(spec.dir, t, x1, x2);
        case KernelKind::RieszHeat: return riesz_heat(spec.dir, t, x1, x2);
        default:
            throw std::invalid_argument("FullSpaceKernel::eval: unsupported kernel kind");
    }
}

double FullSpaceKernel::heat_direct(double mu, double t, double rho) {
    if (t <= 0.0) return 0.0;
    double umax = std::pow(41.0 / t, 0.5 / mu);
    int n = static_cast<int>(std::max(4000.0, umax * 24.0 * std::max(rho, 1.0) / k_two_pi));
    n = std::min(n, 4000000);
    auto f = [&](double u) {
        return u * std::exp(-t * std::pow(u, 2.0 * mu)) * std::cyl_bessel_j(0, u * rho);
    };
    return simpson(f, 0.0, umax, n) / k_two_pi;
}

// --- singularity-adapted quadrature -------------------------------------------

namespace {

// Integrates f over the parabolic shell r_in <= ||v||_s < r_out by a midpoint
// rule on the bounding box with shell membership. Kernel factors are expected
// to supply their own support restrictions.
double shell_integral(const ParabolicScaling& sc, double r_in, double r_out,
                      const std::function<double(double, double, double)>& f,
                      int nt = 12, int nxy = 20) {
    double tb = std::pow(r_out, sc.s0());
    double dt = 2.0 * tb / nt;
    double dx = 2.0 * r_out / nxy;
    double acc = 0.0;
    for (int it = 0; it < nt; ++it) {
        double t = -tb + (it + 0.5) * dt;
        for (int iy = 0; iy < nxy; ++iy) {
            double y = -r_out + (iy + 0.5) * dx;
            for (int ix = 0; ix < nxy; ++ix) {
                double x = -r_out + (ix + 0.5) * dx;
                double r = sc.norm(t, x, y);
                if (r < r_in || r >= r_out) continue;
                acc += f(t, x, y);
            }
        }
    }
    return acc * dt * dx * dx;
}

// \int f(v) dv over ||v||_s < r_top with a dyadic-shell ladder that resolves an
// integrable singularity at v = 0.
double singular_ball_integral(const ParabolicScaling& sc, double r_top, int levels,
                              const std::function<double(double, double, double)>& f) {
    double acc = 0.0;
    for (int l = 0; l < levels; ++l)
        acc += shell_integral(sc, r_top * std::pow(0.5, l + 1), r_top * std::pow(0.5, l), f);
    return acc;
}

} // namespace

double convolve_at(const KernelContext& ctx, const KernelSpec& a, const KernelSpec& b,
                   double t, double x1, double x2) {
    const ParabolicScaling& sc = ctx.scaling();
    auto ka = [&](double s, double y1, double y2) {
        double r = sc.norm(s, y1, y2);
        double c = cutoff_profile(r);
        return c == 0.0 ? 0.0 : c * ctx.full().eval(a, s, y1, y2);
    };
    auto kb = [&](double s, double y1, double y2) {
        double r = sc.norm(s, y1, y2);
        double c = cutoff_profile(r);
        return c == 0.0 ? 0.0 : c * ctx.full().eval(b, s, y1, y2);
    };

    double rw = sc.norm(t, x1, x2);
    double r_half = 0.5 * rw;
    auto integrand = [&](double s, double y1, double y2) {
        return ka(s, y1, y2) * kb(t - s, x1 - y1, x2 - y2);
    };

    // Singularity of a at v=0.
    double acc = singular_ball_integral(sc, r_half, 14, integrand);
    // Singularity of b at v=w (substitute v = w - v').
    acc += singular_ball_integral(sc, r_half, 14, [&](double s, double y1, double y2) {
        return ka(t - s, x1 - y1, x2 - y2) * kb(s, y1, y2);
    });
    // Bulk: shells around the origin excluding both singular balls.
    double r_lo = r_half;
    while (r_lo < 2.5) {
        double r_hi = std::min(2.0 * r_lo, 2.5);
        acc += shell_integral(sc, r_lo, r_hi, [&](double s, double y1, double y2) {
            if (sc.norm(t - s, x1 - y1, x2 - y2) < r_half) return 0.0;
            return integrand(s, y1, y2);
        }, 16, 28);
        r_lo = r_hi;
    }
    return acc;
}

// --- KernelContext -------------------------------------------------------------

double KernelContext::eval(const KernelSpec& spec, double t, double x1, double x2) const {
    if (spec.kind != KernelKind::Mollified) return full_->eval(spec, t, x1, x2);
    if (!spec.base) throw std::invalid_argument("KernelContext::eval: mollified spec without base");

    if (spec.reflected) { t = -t; x1 = -x1; x2 = -x2; }
    Mollifier rho{MollifierProfile(spec.mollifier), spec.eps, scaling_.s0(), false};
    const KernelSpec& base = *spec.base;
    double eps = spec.eps;
    double rz = scaling_.norm(t, x1, x2);

    if (rz > 3.0 * eps) {
        // Kernel smooth across the mollifier support: plain midpoint quadrature in u.
        int nt = 10, nxy = 20;
        double tb = rho.time_scale(), dtu = 2.0 * tb / nt, dxu = 2.0 * eps / nxy;
        double acc = 0.0;
        for (int it = 0; it < nt; ++it) {
            double ut = -tb + (it + 0.5) * dtu;
            for (int iy = 0; iy < nxy; ++iy) {
                double uy = -eps + (iy + 0.5) * dxu;
                for (int ix = 0; ix < nxy; ++ix) {
                    double ux = -eps + (ix + 0.5) * dxu;
                    double w = rho(ut, ux, uy);
                    if (w == 0.0) continue;
                    acc += w * full_->eval(base, t - ut, x1 - ux, x2 - uy);
                }
            }
        }
        return acc * dtu * dxu * dxu;
    }
    // Kernel singularity inside the support: integrate in v with shells at 0.
    double r_top = rz + 2.0 * eps;
    return singular_ball_integral(scaling_, r_top, 16, [&](double s, double y1, double y2) {
        double w = rho(t - s, x1 - y1, x2 - y2);
        return w == 0.0 ? 0.0 : w * full_->eval(base, s, y1, y2);
    });
}

// --- periodic spectral view ------------------------------------------------------

double heat_multiplier(double mu, int kx, int ky) {
    double k2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
    return std::pow(k_two_pi * k_two_pi * k2, mu);
}

double heat_kernel_eval(double mu, double t, double x1, double x2, int mode_cut) {
    if (t <= 0.0) throw std::invalid_argument("heat_kernel_eval: t must be positive");
    if (mode_cut < 1) throw std::invalid_argument("heat_kernel_eval: mode_cut must be >= 1");
    double acc = 0.0;
    for (int kx = -mode_cut; kx <= mode_cut; ++kx)
        for (int ky = -mode_cut; ky <= mode_cut; ++ky)
            acc += std::exp(-t * heat_multiplier(mu, kx, ky)) *
                   std::cos(k_two_pi * (kx * x1 + ky * x2));
    return acc;
}

PeriodicField periodic_heat_field(double mu, double t, std::size_t nx) {
    if (t <= 0.0) throw std::invalid_argument("periodic_heat_field: t must be positive");
    std::vector<cplx> coeff(nx * nx);
    for (std::size_t iy = 0; iy < nx; ++iy) {
        int ky = signed_mode(iy, nx);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            int kx = signed_mode(ix, nx);
            coeff[ix + nx * iy] = std::exp(-t * heat_multiplier(mu, kx, ky));
        }
    }
    return PeriodicField::from_spectrum(nx, nx, std::move(coeff));
}

PeriodicField riesz_apply(int i, const PeriodicField& f) {
    if (i != 1 && i != 2) throw std::invalid_argument("riesz_apply: component must be 1 or 2");
    std::size_t nx = f.nx(), ny = f.ny();
    return apply_multiplier(f, [&](int kx, int ky) -> cplx {
        if (kx == 0 && ky == 0) return 0.0;
        // Odd multiplier: unpaired Nyquist rows map to 0 so real fields stay
        // real and the orthogonal velocity stays divergence-free mode by mode.
        if (kx == -static_cast<int>(nx / 2) || ky == -static_cast<int>(ny / 2)) return 0.0;
        double norm = std::sqrt(static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
        return cplx(0.0, (i == 1 ? kx : ky) / norm);
    });
}

// --- dyadic decomposition ---------------------------------------------------------

namespace {

double partition_chi(const ParabolicScaling& sc, int n, double t, double x1, double x2) {
    double r = sc.norm(t, x1, x2);
    return cutoff_profile(std::pow(2.0, n) * r) - cutoff_profile(std::pow(2.0, n + 1) * r);
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// Scaled monomial basis of plain degree <= deg over a box of scales (ts, xs).
struct MonomialBasis {
    std::vector<MultiIndex> alphas;
    double ts, xs;
    MonomialBasis(int deg, double ts_, double xs_) : ts(ts_), xs(xs_) {
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; b + a <= deg; ++b)
                for (int c = 0; c + b + a <= deg; ++c) alphas.push_back({a, b, c});
    }
    double eval(std::size_t idx, double t, double x1, double x2) const {
        const MultiIndex& m = alphas[idx];
        return ipow(t / ts, m.k0) * ipow(x1 / xs, m.k1) * ipow(x2 / xs, m.k2);
    }
};

// One bump-times-polynomial moment carrier. The bump lives in the outer
// spatial annulus (0.8, 0.95) * 2^{-level} and the causal time window, so its
// parabolic radius stays inside (2^{-level-1}, 2^{-level}): layer `level`
// belongs to piece `level` (subtracted) and piece `level-1` (added back).
struct CorrectionLayer {
    int level = 0;
    double r_scale = 0.0;   // 2^{-level}
    double t_scale = 0.0;   // (2^{-level})^{s0}
    std::vector<MultiIndex> alphas;
    std::vector<double> coeff; // against monomials scaled by (t_scale, r_scale)

    static double time_window(double s) { // supported s in (0,1)
        double a = 2.0 * s - 1.0;
        return s > 0.0 && s < 1.0 ? smooth_bump_arg(a * a) : 0.0;
    }
    static double radial_window(double rho) { // supported rho in (0.8, 0.95)
        if (rho <= 0.8 || rho >= 0.95) return 0.0;
        double a = (rho - 0.875) / 0.075;
        return smooth_bump_arg(a * a);
    }
    double bump(double t, double x1, double x2) const {
        return time_window(t / t_scale) * radial_window(std::hypot(x1, x2) / r_scale);
    }
    double eval(double t, double x1, double x2) const {
        double b = bump(t, x1, x2);
        if (b == 0.0) return 0.0;
        double p = 0.0;
        for (std::size_t i = 0; i < alphas.size(); ++i)
            p += coeff[i] * ipow(t / t_scale, alphas[i].k0) * ipow(x1 / r_scale, alphas[i].k1) *
                 ipow(x2 / r_scale, alphas[i].k2);
        return p * b;
    }
};

// Exact (1D-quadrature) moments of the separable layer bump: under the layer's
// scaled coordinates, \int (t/ts)^a (x1/rs)^b (x2/rs)^c B dz factorizes into
// time, radial and angular integrals times ts*rs^2.
struct LayerMomentTables {
    std::vector<double> time_mom;               // \int_0^1 s^a q(s) ds
    std::vector<double> rad_mom;                // \int rho^{m+1} g(rho) drho
    std::vector<std::vector<double>> angular;   // \int cos^b sin^c over the circle

    explicit LayerMomentTables(int max_deg) {
        int m = 2 * max_deg;
        time_mom.resize(m + 1);
        rad_mom.resize(m + 1);
        angular.assign(m + 1, std::vector<double>(m + 1, 0.0));
        const int n = 4000;
        for (int i = 0; i < n; ++i) {
            double s = (i + 0.5) / n;
            double q = CorrectionLayer::time_window(s);
            double g = CorrectionLayer::radial_window(s);
            for (int a = 0; a <= m; ++a) {
                time_mom[a] += ipow(s, a) * q / n;
                rad_mom[a] += ipow(s, a + 1) * g / n;
            }
            double th = 2.0 * M_PI * (i + 0.5) / n;
            for (int b = 0; b <= m; ++b)
                for (int c = 0; b + c <= m; ++c)
                    angular[b][c] += ipow(std::cos(th), b) * ipow(std::sin(th), c) * 2.0 * M_PI / n;
        }
    }
    /// Moment of the scaled monomial (a,b,c) against the unit-coefficient bump,
    /// including the absolute-measure factor ts*rs^2.
    double scaled_moment(const CorrectionLayer& l, int a, int b, int c) const {
        return l.t_scale * l.r_scale * l.r_scale * time_mom[a] * rad_mom[b + c] * angular[b][c];
    }
};

void solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[piv], a[col]);
        std::swap(rhs[piv], rhs[col]);
        if (std::abs(a[col][col]) < 1e-300) throw std::runtime_error("singular moment system");
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        for (std::size_t c = col + 1; c < n; ++c) rhs[col] -= a[col][c] * rhs[c];
        rhs[col] /= a[col][col];
    }
}

} // namespace

std::vector<double> DyadicPiece::derivative(int k0, int k1, int k2) const {
    std::vector<double> out = samples;
    auto diff_axis = [&](int axis, double h) {
        std::vector<double> next(out.size(), 0.0);
        auto idx = [&](int it, int ix, int iy) {
            return (static_cast<std::size_t>(it) * nxy + iy) * nxy + ix;
        };
        for (int it = 0; it < nt; ++it)
            for (int iy = 0; iy < nxy; ++iy)
                for (int ix = 0; ix < nxy; ++ix) {
                    auto get = [&](int jt, int jx, int jy) -> double {
                        if (jt < 0 || jt >= nt || jx < 0 || jx >= nxy || jy < 0 || jy >= nxy)
                            return 0.0; // pieces vanish at the box boundary
                        return out[idx(jt, jx, jy)];
                    };
                    double hi, lo;
                    if (axis == 0) { hi = get(it + 1, ix, iy); lo = get(it - 1, ix, iy); }
                    else if (axis == 1) { hi = get(it, ix + 1, iy); lo = get(it, ix - 1, iy); }
                    else { hi = get(it, ix, iy + 1); lo = get(it, ix, iy - 1); }
                    next[idx(it, ix, iy)] = (hi - lo) / (2.0 * h);
                }
        out = std::move(next);
    };
    for (int r = 0; r < k0; ++r) diff_axis(0, dt());
    for (int r = 0; r < k1; ++r) diff_axis(1, dx());
    for (int r = 0; r < k2; ++r) diff_axis(2, dx());
    return out;
}

double DyadicPiece::sup_abs() const {
    double m = 0.0;
    for (double v : samples) m = std::max(m, std::abs(v));
    return m;
}

DyadicDecomposition dyadic_decompose(const KernelContext& ctx, const KernelSpec& spec, int n_max,
                                     int resolution, int moment_degree) {
    if (spec.kind != KernelKind::FractionalHeat && spec.kind != KernelKind::HeatDeriv)
        throw std::invalid_argument("dyadic_decompose: only heat-type kernels are decomposed");
    const ParabolicScaling& sc = ctx.scaling();

    DyadicDecomposition out;
    out.moment_degree = moment_degree;

    struct Scratch {
        std::vector<double> raw;
        std::vector<double> m_q;
        double dt = 0, dx = 0, t0 = 0, x0 = 0;
    };
    std::vector<Scratch> scratch(n_max + 1);
    std::vector<CorrectionLayer> layers(n_max + 2); // layers[n+1] is the finer neighbour
    LayerMomentTables tables(moment_degree);

    // Pass A: sample the raw annular pieces and their moment data.
    for (int n = 0; n <= n_max; ++n) {
        double r_sup = std::pow(2.0, -n);
        if (2.0 * r_sup * resolution < 4.0)
            throw std::runtime_error(
                "dyadic_decompose: resolution leaves fewer than 4 cells across the level-" +
                std::to_string(n) + " support");

        DyadicPiece piece;
        piece.level = n;
        piece.r_max = r_sup;
        piece.t_max = std::pow(r_sup, sc.s0());
        // The local grid may oversample the global budget: the correction
        // annulus is thin and needs a few radial cells at every level.
        piece.nxy = std::clamp(static_cast<int>(2.0 * r_sup * resolution), 64, 96);
        piece.nt = std::clamp(static_cast<int>(std::pow(r_sup * resolution, sc.s0())), 16, 48);

        Scratch& sc_n = scratch[n];
        // Pad the box so the support sits strictly inside the sampled region.
        piece.grid_r = r_sup * (1.0 + 2.0 / piece.nxy);
        piece.grid_t = piece.t_max * (1.0 + 2.0 / piece.nt);
        sc_n.dt = piece.grid_t / piece.nt;
        sc_n.dx = 2.0 * piece.grid_r / piece.nxy;
        sc_n.t0 = 0.0;
        sc_n.x0 = -piece.grid_r;

        MonomialBasis basis(moment_degree, piece.t_max, piece.r_max);
        const std::size_t nb = basis.alphas.size();
        sc_n.m_q.assign(nb, 0.0);
        sc_n.raw.assign(static_cast<std::size_t>(piece.nt) * piece.nxy * piece.nxy, 0.0);

        CorrectionLayer& layer = layers[n];
        layer.level = n;
        layer.r_scale = r_sup;
        layer.t_scale = piece.t_max;
        layer.alphas = basis.alphas;

        double cell = sc_n.dt * sc_n.dx * sc_n.dx;
        for (int it = 0; it < piece.nt; ++it) {
            double t = sc_n.t0 + (it + 0.5) * sc_n.dt;
            for (int iy = 0; iy < piece.nxy; ++iy) {
                double y = sc_n.x0 + (iy + 0.5) * sc_n.dx;
                for (int ix = 0; ix < piece.nxy; ++ix) {
                    double x = sc_n.x0 + (ix + 0.5) * sc_n.dx;
                    double chi = partition_chi(sc, n, t, x, y);
                    double q = chi == 0.0 ? 0.0 : chi * ctx.full().eval(spec, t, x, y);
                    sc_n.raw[(static_cast<std::size_t>(it) * piece.nxy + iy) * piece.nxy + ix] = q;
                    if (q == 0.0) continue;
                    for (std::size_t ib = 0; ib < nb; ++ib)
                        sc_n.m_q[ib] += q * basis.eval(ib, t, x, y) * cell;
                }
            }
        }
        out.pieces.push_back(std::move(piece));
    }

    // Pass B, finest level first: layer n carries the cumulative moments of the
    // levels >= n, so the finished piece Q_n - M_n + M_{n+1} has (approximately)
    // vanishing monomial moments; the enforcement uses the exact factorized
    // bump moments, the residual is reported from the piece quadrature.
    for (int n = n_max; n >= 0; --n) {
        DyadicPiece& piece = out.pieces[n];
        Scratch& sc_n = scratch[n];
        MonomialBasis basis(moment_degree, piece.t_max, piece.r_max);
        const std::size_t nb = basis.alphas.size();
        const CorrectionLayer& finer = layers[n + 1];
        CorrectionLayer& cur = layers[n];

        std::vector<double> rhs = sc_n.m_q;
        if (!finer.coeff.empty()) {
            // Carry the finer layer's moments over exactly: rescaling its
            // monomials into this level's basis is diagonal.
            for (std::size_t ib = 0; ib < nb; ++ib) {
                const MultiIndex& a = basis.alphas[ib];
                double rescale = std::pow(finer.t_scale / piece.t_max, a.k0) *
                                 std::pow(finer.r_scale / piece.r_max, a.k1 + a.k2);
                for (std::size_t jb = 0; jb < nb; ++jb) {
                    const MultiIndex& b = finer.alphas[jb];
                    rhs[ib] += rescale * finer.coeff[jb] *
                               tables.scaled_moment(finer, a.k0 + b.k0, a.k1 + b.k1, a.k2 + b.k2);
                }
            }
        }
        std::vector<std::vector<double>> gram(nb, std::vector<double>(nb));
        for (std::size_t ib = 0; ib < nb; ++ib)
            for (std::size_t jb = 0; jb < nb; ++jb) {
                const MultiIndex& a = basis.alphas[ib];
                const MultiIndex& b = cur.alphas[jb];
                gram[ib][jb] =
                    tables.scaled_moment(cur, a.k0 + b.k0, a.k1 + b.k1, a.k2 + b.k2);
            }
        solve_dense(gram, rhs);
        cur.coeff = rhs; // cur scales coincide with the piece basis scales

        piece.samples.resize(sc_n.raw.size());
        double cell = sc_n.dt * sc_n.dx * sc_n.dx;
        std::vector<double> m_res(nb, 0.0);
        for (int it = 0; it < piece.nt; ++it) {
            double t = sc_n.t0 + (it + 0.5) * sc_n.dt;
            for (int iy = 0; iy < piece.nxy; ++iy) {
                double y = sc_n.x0 + (iy + 0.5) * sc_n.dx;
                for (int ix = 0; ix < piece.nxy; ++ix) {
                    double x = sc_n.x0 + (ix + 0.5) * sc_n.dx;
                    std::size_t id = (static_cast<std::size_t>(it) * piece.nxy + iy) * piece.nxy + ix;
                    double v = sc_n.raw[id] - layers[n].eval(t, x, y) +
                               (finer.coeff.empty() ? 0.0 : finer.eval(t, x, y));
                    piece.samples[id] = v;
                    if (v != 0.0)
                        for (std::size_t ib = 0; ib < nb; ++ib)
                            m_res[ib] += v * basis.eval(ib, t, x, y) * cell;
                }
            }
        }
        double ref = piece.sup_abs() * std::pow(piece.r_max, sc.total());
        double max_mom = 0.0;
        for (std::size_t ib = 0; ib < nb; ++ib) {
            piece.residual_moments[basis.alphas[ib].str()] = m_res[ib];
            max_mom = std::max(max_mom, std::abs(m_res[ib]) / std::max(ref, 1e-300));
        }
        out.max_residual_moment = std::max(out.max_residual_moment, max_mom);
        sc_n = Scratch{};
    }

    // Reassembly probe: the cascade telescopes to K - M_0 away from the origin,
    // and M_0 lives outside parabolic radius 1/2.
    double rel = 0.0;
    for (double r = std::pow(2.0, -n_max + 1); r <= 0.5; r *= 1.31) {
        for (double v : {0.05, 0.3, 0.9}) {
            double t = v * std::pow(r, sc.s0());
            double x = r * 0.8, y = -r;
            double k = ctx.full().eval(spec, t, x, y);
            if (k == 0.0) continue;
            double sum = -layers[0].eval(t, x, y);
            for (int n = 0; n <= n_max; ++n)
                sum += partition_chi(sc, n, t, x, y) * ctx.full().eval(spec, t, x, y);
            rel = std::max(rel, std::abs(sum - k) / std::abs(k));
        }
    }
    out.reassembly_rel_error = rel;
    return out;
}

// --- order fits -------------------------------------------------------------------

namespace {

// Points on the parabolic sphere of radius r (t > 0 half when the kernel is
// non-anticipative; the sampler always includes the t>0 faces).
std::vector<std::array<double, 3>> sphere_points(const ParabolicScaling& sc, double r) {
    std::vector<std::array<double, 3>> pts;
    double tb = std::pow(r, sc.s0());
    for (double v : {1e-3, 1e-2, 0.1, 0.3, 0.6}) {
        for (double w : {-1.0, -0.4, 0.2, 0.9}) {
            pts.push_back({v * tb, r, w * r});
            pts.push_back({v * tb, w * r, -r});
        }
    }
    for (double w1 : {-0.9, -0.3, 0.4, 1.0})
        for (double w2 : {-1.0, -0.5, 0.1, 0.8}) pts.push_back({tb, w1 * r, w2 * r});
    return pts;
}

} // namespace

ScalingFit kernel_order_fit(const KernelContext& ctx, const KernelSpec& spec, const MultiIndex& k,
                            const std::vector<double>& radii) {
    if (radii.size() < 4) throw std::invalid_argument("kernel_order_fit: need at least 4 radii");
    if (k.k0 != 0 || k.k1 + k.k2 > 1)
        throw std::invalid_argument("kernel_order_fit: only spatial derivatives up to order 1");

    std::vector<std::pair<double, double>> pts;
    int excluded = 0;
    for (double r : radii) {
        if (!(r > 0.0 && r <= 0.5))
            throw std::invalid_argument("kernel_order_fit: radii must lie in (0,1/2]");
        double sup = 0.0;
        for (const auto& [t, x, y] : sphere_points(ctx.scaling(), r)) {
            double v;
            if (k.k1 + k.k2 == 0) {
                v = ctx.eval(spec, t, x, y);
            } else if (spec.kind == KernelKind::FractionalHeat) {
                v = ctx.full().heat_deriv(k.k1 == 1 ? 1 : 2, t, x, y);
            } else {
                throw std::invalid_argument("kernel_order_fit: derivative fits only for the heat kernel");
            }
            if (!std::isfinite(v)) { ++excluded; continue; }
            sup = std::max(sup, std::abs(v));
        }
        if (sup > 0.0) pts.emplace_back(std::log(r), std::log(sup));
        else ++excluded;
    }
    return ScalingFit::least_squares(std::move(pts), excluded);
}

ScalingFit convolution_order_fit(const KernelContext& ctx, const KernelSpec& a, const KernelSpec& b,
                                 const std::vector<double>& radii, bool pointwise) {
    if (radii.size() < 4) throw std::invalid_argument("convolution_order_fit: need >= 4 radii");
    std::vector<std::pair<double, double>> pts;
    int excluded = 0;
    for (double r : radii) {
        double sup = 0.0;
        auto probes = sphere_points(ctx.scaling(), r);
        // A reduced probe set keeps the quadrature budget reasonable.
        for (std::size_t i = 0; i < probes.size(); i += 3) {
            auto [t, x, y] = probes[i];
            double v = pointwise ? ctx.eval(a, t, x, y) * ctx.eval(b, t, x, y)
                                 : convolve_at(ctx, a, b, t, x, y);
            if (!std::isfinite(v)) { ++excluded; continue; }
            sup = std::max(sup, std::abs(v));
        }
        if (sup > 0.0) pts.emplace_back(std::log(r), std::log(sup));
        else ++excluded;
    }
    return ScalingFit::least_squares(std::move(pts), excluded);
}

ScalingFit convolution_product_order_fit(const KernelContext& ctx, const KernelSpec& a1,
                                         const KernelSpec& a2, const KernelSpec& b1,
                                         const KernelSpec& b2, const std::vector<double>& radii) {
    if (radii.size() < 4)
        throw std::invalid_argument("convolution_product_order_fit: need >= 4 radii");
    std::vector<std::pair<double, double>> pts;
    int excluded = 0;
    for (double r : radii) {
        double sup = 0.0;
        auto probes = sphere_points(ctx.scaling(), r);
        for (std::size_t i = 0; i < probes.size(); i += 6) {
            auto [t, x, y] = probes[i];
            double v = convolve_at(ctx, a1, a2, t, x, y) * convolve_at(ctx, b1, b2, t, x, y);
            if (!std::isfinite(v)) { ++excluded; continue; }
            sup = std::max(sup, std::abs(v));
        }
        if (sup > 0.0) pts.emplace_back(std::log(r), std::log(sup));
        else ++excluded;
    }
    return ScalingFit::least_squares(std::move(pts), excluded);
}

// --- mollified kernel bounds ---------------------------------------------------------

MollifiedCheckReport mollified_kernel_check(const KernelContext& ctx, const KernelSpec& spec,
                                            MollifierProfile::Shape shape,
                                            const std::vector<double>& eps_list, double nu,
                                            double flag_factor) {
    double zeta = spec.order();
    double s_total = ctx.scaling().total();
    if (!(zeta > -s_total && zeta < 0.0))
        throw std::invalid_argument("mollified_kernel_check: order must lie in (-|s|, 0)");
    if (!(nu > 0.0 && nu <= 1.0))
        throw std::invalid_argument("mollified_kernel_check: nu must lie in (0,1]");

    MollifiedCheckReport rep;
    rep.eps_list = eps_list;
    for (double eps : eps_list) {
        KernelSpec meps;
        meps.kind = KernelKind::Mollified;
        meps.mu = spec.mu;
        meps.eps = eps;
        meps.mollifier = shape;
        meps.base = std::make_unique<KernelSpec>(spec.clone());

        double bound_sup = 0.0, diff_sup = 0.0;
        std::vector<double> rs;
        for (double r = eps / 4.0; r <= 0.5; r *= 1.9) rs.push_back(r);
        for (double r : rs) {
            auto probes = sphere_points(ctx.scaling(), r);
            for (std::size_t i = 0; i < probes.size(); i += 4) {
                auto [t, x, y] = probes[i];
                double ke = ctx.eval(meps, t, x, y);
                double k = ctx.eval(spec, t, x, y);
                double rn = ctx.scaling().norm(t, x, y);
                bound_sup = std::max(bound_sup, std::abs(ke) * std::pow(rn + eps, -zeta));
                if (rn > eps / 2.0)
                    diff_sup = std::max(diff_sup, std::abs(k - ke) * std::pow(eps, -nu) *
                                                      std::pow(rn, nu - zeta));
            }
        }
        // z = 0 probes the saturated regime |K_eps(0)| <= C eps^zeta.
        double k0 = ctx.eval(meps, 0.0, 0.0, 0.0);
        bound_sup = std::max(bound_sup, std::abs(k0) * std::pow(eps, -zeta));
        rep.bound_ratio_sup.push_back(bound_sup);
        rep.diff_ratio_sup.push_back(diff_sup);
    }
    auto spread = [](const std::vector<double>& v) {
        double lo = *std::min_element(v.begin(), v.end());
        double hi = *std::max_element(v.begin(), v.end());
        return lo > 0.0 ? hi / lo : 0.0;
    };
    rep.bound_spread = spread(rep.bound_ratio_sup);
    rep.diff_spread = spread(rep.diff_ratio_sup);
    rep.flagged = rep.bound_spread > flag_factor || rep.diff_spread > flag_factor;
    if (rep.flagged)
        rep.note = "ratio suprema drift across eps beyond the configured factor; "
                   "check quadrature resolution";
    return rep;
}

} // namespace sqg
