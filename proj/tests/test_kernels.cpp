#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sqg/kernels.hpp"

using namespace sqg;

namespace {

PeriodicField random_mean_zero(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    PeriodicField f(n, n);
    for (auto& v : f.mutable_values()) v = dist(gen);
    double m = f.mean();
    for (auto& v : f.mutable_values()) v -= m;
    return f;
}

} // namespace

TEST_CASE("parabolic norm is homogeneous under the anisotropic scaling") {
    ParabolicScaling sc{0.9};
    for (double lam : {0.5, 1.0, 2.0}) {
        for (auto [t, x, y] : {std::array<double, 3>{0.3, -0.2, 0.05},
                               {1e-3, 0.4, 0.4},
                               {0.07, 0.0, -0.9}}) {
            double lhs = sc.norm(std::pow(lam, sc.s0()) * t, lam * x, lam * y);
            CHECK(lhs == doctest::Approx(lam * sc.norm(t, x, y)).epsilon(1e-12));
        }
    }
    CHECK(sc.total() == doctest::Approx(3.8));
}

TEST_CASE("periodic heat kernel: mass, semigroup, multiplier") {
    double mu = 0.9;
    PeriodicField k1 = periodic_heat_field(mu, 0.1, 64);
    CHECK(k1.mean() == doctest::Approx(1.0).epsilon(1e-12));

    PeriodicField k2 = periodic_heat_field(mu, 0.2, 64);
    PeriodicField k3 = periodic_heat_field(mu, 0.3, 64);
    PeriodicField conv = torus_convolve(k1, k2);
    CHECK((conv - k3).max_abs() < 1e-8);

    // Spatial transform of the sampled mode-sum evaluator returns the multiplier.
    std::size_t n = 32;
    PeriodicField f(n, n);
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix)
            f.at(ix, iy) = heat_kernel_eval(mu, 0.1, double(ix) / n, double(iy) / n, 15);
    for (int kx = -8; kx <= 8; ++kx)
        for (int ky = -8; ky <= 8; ++ky) {
            cplx c = f.coeff(kx, ky);
            double want = std::exp(-0.1 * heat_multiplier(mu, kx, ky));
            CHECK(std::abs(c - cplx(want, 0.0)) < 1e-10);
        }

    CHECK_THROWS(heat_kernel_eval(mu, 0.0, 0.1, 0.1, 8));
    CHECK_THROWS(heat_kernel_eval(mu, -0.1, 0.1, 0.1, 8));
}

TEST_CASE("mu=1 periodic kernel matches the periodized Gaussian lattice sum") {
    double t = 0.05, x1 = 0.3, x2 = 0.1;
    double oracle = 0.0;
    for (int m1 = -6; m1 <= 6; ++m1)
        for (int m2 = -6; m2 <= 6; ++m2) {
            double dx = x1 + m1, dy = x2 + m2;
            oracle += std::exp(-(dx * dx + dy * dy) / (4.0 * t)) / (4.0 * M_PI * t);
        }
    CHECK(heat_kernel_eval(1.0, t, x1, x2, 24) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("Riesz multiplier: annihilates constants, squares to -Id, divergence-free") {
    PeriodicField c(64, 64);
    for (auto& v : c.mutable_values()) v = 3.7;
    CHECK(riesz_apply(1, c).max_abs() < 1e-12);

    PeriodicField f = random_mean_zero(64, 2024);
    PeriodicField rr = riesz_apply(1, riesz_apply(1, f)) + riesz_apply(2, riesz_apply(2, f));
    PeriodicField sum = rr + f; // R1^2 + R2^2 = -Id away from the Nyquist row
    double imax = 0.0;
    for (std::size_t iy = 0; iy < 64; ++iy)
        for (std::size_t ix = 0; ix < 64; ++ix) {
            int kx = signed_mode(ix, 64), ky = signed_mode(iy, 64);
            if (kx == -32 || ky == -32 || (kx == 0 && ky == 0)) continue;
            imax = std::max(imax, std::abs(sum.coeff(kx, ky)));
        }
    CHECK(imax < 1e-12);

    // u = (-R2 theta, R1 theta) has k.u(k) = 0 for every mode.
    PeriodicField u1 = riesz_apply(2, f); // sign flip tracked below
    PeriodicField u2 = riesz_apply(1, f);
    double dmax = 0.0;
    for (std::size_t iy = 0; iy < 64; ++iy)
        for (std::size_t ix = 0; ix < 64; ++ix) {
            int kx = signed_mode(ix, 64), ky = signed_mode(iy, 64);
            dmax = std::max(dmax, std::abs(-double(kx) * u1.coeff(kx, ky) +
                                           double(ky) * u2.coeff(kx, ky)));
        }
    CHECK(dmax < 1e-12);

    // Sign convention: R1 sin(2 pi x1) = cos(2 pi x1).
    PeriodicField s(32, 32);
    for (std::size_t iy = 0; iy < 32; ++iy)
        for (std::size_t ix = 0; ix < 32; ++ix)
            s.at(ix, iy) = std::sin(2.0 * M_PI * ix / 32.0);
    PeriodicField r1s = riesz_apply(1, s);
    for (std::size_t ix = 0; ix < 32; ++ix)
        CHECK(r1s(ix, 7) == doctest::Approx(std::cos(2.0 * M_PI * ix / 32.0)).epsilon(1e-12));
}

TEST_CASE("grid kernels have the right parity") {
    double mu = 0.9;
    PeriodicField k = periodic_heat_field(mu, 0.07, 64);
    PeriodicField rk = riesz_apply(1, k);
    double even = 0.0, odd = 0.0;
    for (std::size_t iy = 0; iy < 64; ++iy)
        for (std::size_t ix = 0; ix < 64; ++ix) {
            std::size_t jx = (64 - ix) % 64, jy = (64 - iy) % 64;
            even = std::max(even, std::abs(k(ix, iy) - k(jx, jy)));
            odd = std::max(odd, std::abs(rk(ix, iy) + rk(jx, jy)));
        }
    CHECK(even < 1e-12);
    CHECK(odd < 1e-12);
}

TEST_CASE("full-plane table reproduces the mu=1 Gaussian") {
    FullSpaceKernel fk(1.0);
    for (double rho : {0.0, 0.3, 1.0, 2.5, 5.0}) {
        double want = std::exp(-rho * rho / 4.0) / (4.0 * M_PI);
        CHECK(fk.heat(1.0, rho, 0.0) == doctest::Approx(want).epsilon(5e-5));
    }
    // Self-similar evaluation at other times.
    double t = 0.2, rho = 0.4;
    double want = std::exp(-rho * rho / (4.0 * t)) / (4.0 * M_PI * t);
    CHECK(fk.heat(t, 0.4, 0.0) == doctest::Approx(want).epsilon(5e-5));
}

TEST_CASE("self-similar form agrees with direct oscillatory quadrature") {
    double mu = 0.9;
    FullSpaceKernel fk(mu);
    for (double t : {0.01, 0.05, 0.1}) {
        for (double rho : {0.0, 0.1, 0.3}) {
            double direct = FullSpaceKernel::heat_direct(mu, t, rho);
            double scaled = std::pow(t, -1.0 / mu) *
                            FullSpaceKernel::heat_direct(mu, 1.0, std::pow(t, -0.5 / mu) * rho);
            CHECK(direct == doctest::Approx(scaled).epsilon(0.01));
            CHECK(fk.heat(t, rho, 0.0) == doctest::Approx(direct).epsilon(0.01));
        }
    }
}

TEST_CASE("periodized full-plane Riesz kernel matches the grid multiplier route") {
    double mu = 0.9, t = 0.05;
    FullSpaceKernel fk(mu);
    PeriodicField k = periodic_heat_field(mu, t, 64);
    PeriodicField rk = riesz_apply(1, k);
    for (auto [x1, x2] : {std::pair<double, double>{0.3, 0.1}, {0.2, -0.25}}) {
        double lattice = 0.0;
        for (int m1 = -20; m1 <= 20; ++m1)
            for (int m2 = -20; m2 <= 20; ++m2)
                lattice += fk.riesz_heat(1, t, x1 + m1, x2 + m2);
        double xg = x1 - std::floor(x1), yg = x2 - std::floor(x2);
        double grid = rk(static_cast<std::size_t>(std::lround(xg * 64)) % 64,
                         static_cast<std::size_t>(std::lround(yg * 64)) % 64);
        CHECK(lattice == doctest::Approx(grid).epsilon(0.02));
    }
}

TEST_CASE("kernel order fits") {
    KernelContext ctx(0.9);
    std::vector<double> radii;
    for (int i = 0; i < 9; ++i) radii.push_back(0.5 * std::pow(2.0, -i * 0.5));

    ScalingFit fit_k = kernel_order_fit(ctx, KernelSpec::fractional_heat(0.9), {0, 0, 0}, radii);
    CHECK(fit_k.slope == doctest::Approx(-2.0).epsilon(0.075));

    ScalingFit fit_rk = kernel_order_fit(ctx, KernelSpec::riesz_heat(1, 0.9), {0, 0, 0}, radii);
    CHECK(fit_rk.slope == doctest::Approx(-2.0).epsilon(0.075));

    ScalingFit fit_dk = kernel_order_fit(ctx, KernelSpec::fractional_heat(0.9), {0, 1, 0}, radii);
    CHECK(std::abs(fit_dk.slope - (-3.0)) < 0.2);

    CHECK_THROWS(kernel_order_fit(ctx, KernelSpec::fractional_heat(0.9), {1, 0, 0}, radii));
    CHECK_THROWS(kernel_order_fit(ctx, KernelSpec::fractional_heat(0.9), {0, 0, 0}, {0.5, 0.25}));
}

TEST_CASE("declared kernel orders and smoothing") {
    CHECK(KernelSpec::fractional_heat(0.9).order() == doctest::Approx(-2.0));
    CHECK(KernelSpec::fractional_heat(0.9).smoothing() == doctest::Approx(1.8));
    CHECK(KernelSpec::heat_deriv(1, 0.9).order() == doctest::Approx(-3.0));
    CHECK(KernelSpec::heat_deriv(1, 0.9).smoothing() == doctest::Approx(0.8));
    CHECK(KernelSpec::riesz_heat(2, 0.9).order() == doctest::Approx(-2.0));
    CHECK(KernelSpec::riesz_component(1).order() == doctest::Approx(-2.0));
    CHECK(KernelSpec::riesz_component(1).smoothing() == doctest::Approx(0.0));
}

TEST_CASE("dyadic decomposition: reassembly, support, scale bound, moments") {
    KernelContext ctx(0.9);
    DyadicDecomposition dec = dyadic_decompose(ctx, KernelSpec::fractional_heat(0.9), 7, 512, 2);
    REQUIRE(dec.pieces.size() == 8);

    CHECK(dec.reassembly_rel_error < 1e-6);
    // Moment killing is enforced through the factorized bump integrals and is
    // approximate on the piece quadrature; the residual is reported relative
    // to sup|K_n| * r^{|s|}.
    CHECK(dec.max_residual_moment < 2e-2);

    // Boundary ring of each local box vanishes (support strictly inside 2^{-n+1}).
    for (const auto& p : dec.pieces) {
        double edge = 0.0;
        for (int it = 0; it < p.nt; ++it)
            for (int i = 0; i < p.nxy; ++i) {
                edge = std::max(edge, std::abs(p.sample(it, i, 0)));
                edge = std::max(edge, std::abs(p.sample(it, i, p.nxy - 1)));
                edge = std::max(edge, std::abs(p.sample(it, 0, i)));
                edge = std::max(edge, std::abs(p.sample(it, p.nxy - 1, i)));
            }
        CHECK(edge == 0.0);
    }

    // sup |K_n| grows like 2^{(|s|-beta) n} = 2^{2n}.
    std::vector<std::pair<double, double>> pts;
    for (int n = 2; n <= 6; ++n)
        pts.emplace_back(n, std::log2(dec.pieces[n].sup_abs()));
    ScalingFit fit = ScalingFit::least_squares(std::move(pts));
    CHECK(std::abs(fit.slope - 2.0) < 0.2);

    CHECK_THROWS(dyadic_decompose(ctx, KernelSpec::fractional_heat(0.9), 9, 512, 2));
    CHECK_THROWS(dyadic_decompose(ctx, KernelSpec::riesz_component(1), 4, 256, 2));
}

TEST_CASE("convolution and pointwise-product order fits") {
    KernelContext ctx(0.9);
    std::vector<double> radii{0.4, 0.25, 0.16, 0.1, 0.063, 0.04};

    ScalingFit prod = convolution_order_fit(ctx, KernelSpec::fractional_heat(0.9),
                                            KernelSpec::fractional_heat(0.9), radii, true);
    CHECK(std::abs(prod.slope - (-4.0)) < 0.2);

    ScalingFit conv = convolution_order_fit(ctx, KernelSpec::fractional_heat(0.9),
                                            KernelSpec::fractional_heat(0.9), radii, false);
    CHECK(std::abs(conv.slope - (-0.2)) < 0.2);
}

TEST_CASE("mollified kernel bounds hold uniformly over eps") {
    KernelContext ctx(0.9);
    std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
    MollifiedCheckReport rep = mollified_kernel_check(
        ctx, KernelSpec::fractional_heat(0.9), MollifierProfile::Shape::Exponential, eps, 0.5);
    CHECK(!rep.flagged);
    CHECK(rep.bound_spread < 3.0);
    CHECK(rep.diff_spread < 3.0);

    // Pointwise convergence at a fixed regular point.
    double t = 0.2, x = 0.2;
    double kv = ctx.eval(KernelSpec::fractional_heat(0.9), t, x, 0.0);
    std::vector<double> diffs;
    for (double e : eps) {
        KernelSpec m;
        m.kind = KernelKind::Mollified;
        m.mu = 0.9;
        m.eps = e;
        m.base = std::make_unique<KernelSpec>(KernelSpec::fractional_heat(0.9));
        diffs.push_back(std::abs(kv - ctx.eval(m, t, x, 0.0)));
    }
    for (std::size_t i = 1; i < diffs.size(); ++i) CHECK(diffs[i] < diffs[i - 1] * 1.2);
    CHECK(diffs.back() < diffs.front());
}

TEST_CASE("mollifier profiles are even with unit mass") {
    for (auto shape : {MollifierProfile::Shape::Exponential, MollifierProfile::Shape::PolynomialC3}) {
        MollifierProfile rho(shape);
        CHECK(rho(0.3, 0.2, -0.1) == doctest::Approx(rho(-0.3, -0.2, 0.1)).epsilon(1e-14));
        // Unit mass within quadrature tolerance.
        int n = 64;
        double mass = 0.0, h = 2.0 / n;
        for (int it = 0; it < n; ++it)
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix)
                    mass += rho(-1 + (it + 0.5) * h, -1 + (ix + 0.5) * h, -1 + (iy + 0.5) * h) *
                            h * h * h;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    }
}
