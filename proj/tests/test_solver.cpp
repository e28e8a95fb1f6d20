#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sqg/kernels.hpp"
#include "sqg/solver.hpp"

using namespace sqg;

namespace {

// Random band-limited field: smooth enough that quadratic products stay fully
// resolved under the 2/3 rule.
PeriodicField random_band_limited(std::size_t n, int kmax, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    PeriodicField f(n, n);
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) {
            double x = double(ix) / n, y = double(iy) / n, v = 0.0;
            std::mt19937_64 g2(seed);
            for (int kx = -kmax; kx <= kmax; ++kx)
                for (int ky = 0; ky <= kmax; ++ky) {
                    double a = std::normal_distribution<double>()(g2);
                    double b = std::normal_distribution<double>()(g2);
                    if (kx == 0 && ky == 0) continue;
                    v += a * std::cos(2 * M_PI * (kx * x + ky * y)) +
                         b * std::sin(2 * M_PI * (kx * x + ky * y));
                }
            f.at(ix, iy) = v / (kmax + 1.0);
        }
    return f;
}

} // namespace

TEST_CASE("divergence form agrees with the advective form on resolved modes") {
    PeriodicField theta = random_band_limited(128, 10, 31);
    PeriodicField a = sqg_nonlinearity(theta, 2.0 / 3.0);
    PeriodicField b = sqg_nonlinearity_advective(theta, 2.0 / 3.0);
    CHECK((a - b).max_abs() < 1e-8);
}

TEST_CASE("a single plane wave does not self-advect") {
    std::size_t n = 64;
    PeriodicField theta(n, n);
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix)
            theta.at(ix, iy) = std::cos(2 * M_PI * double(ix) / n);
    CHECK(sqg_nonlinearity(theta).max_abs() < 1e-12);
}

TEST_CASE("transport is energy neutral") {
    PeriodicField theta = random_band_limited(128, 9, 77);
    PeriodicField nl = sqg_nonlinearity(theta, 2.0 / 3.0);
    double ip = PeriodicField::pointwise(theta, nl).mean(); // domain integral
    CHECK(std::abs(ip) < 1e-8 * std::max(1.0, theta.l2_norm() * nl.l2_norm()));
}

TEST_CASE("velocity is divergence-free mode by mode") {
    PeriodicField theta = random_band_limited(64, 12, 5);
    auto [u1, u2] = riesz_velocity(theta);
    double dmax = 0.0;
    for (std::size_t iy = 0; iy < 64; ++iy)
        for (std::size_t ix = 0; ix < 64; ++ix) {
            int kx = signed_mode(ix, 64), ky = signed_mode(iy, 64);
            dmax = std::max(dmax,
                            std::abs(double(kx) * u1.coeff(kx, ky) + double(ky) * u2.coeff(kx, ky)));
        }
    CHECK(dmax < 1e-12);
}

TEST_CASE("single-mode exact decay") {
    SolverConfig cfg;
    cfg.mu = 0.9;
    cfg.T = 0.5;
    cfg.nt = 256;
    cfg.nx = 64;
    cfg.init = SolverConfig::Init::Mode;
    cfg.mode_kx = 1;
    cfg.mode_ky = 0;
    Trajectory traj = solve_sqg(cfg, nullptr);
    const PeriodicField& last = traj.fields.back();
    double decay = std::exp(-0.5 * std::pow(2.0 * M_PI, 1.8));
    double err = 0.0;
    for (std::size_t ix = 0; ix < 64; ++ix)
        err = std::max(err, std::abs(last(ix, 7) - decay * std::cos(2 * M_PI * ix / 64.0)));
    CHECK(err < 1e-6);
    CHECK(traj.max_imag_residue < 1e-12);
    CHECK(traj.max_divergence < 1e-12);
    CHECK(!traj.blew_up);
}

TEST_CASE("zero data and zero noise stay identically zero") {
    SolverConfig cfg;
    cfg.nt = 64;
    cfg.nx = 32;
    cfg.T = 0.25;
    Trajectory traj = solve_sqg(cfg, nullptr);
    for (const auto& f : traj.fields) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("noise-free energy balance") {
    SolverConfig cfg;
    cfg.mu = 0.9;
    cfg.T = 0.02;
    cfg.nt = 1600;
    cfg.nx = 64;
    cfg.snapshots = 1601;
    cfg.init = SolverConfig::Init::Field;
    cfg.init_field = random_band_limited(64, 6, 123);
    Trajectory traj = solve_sqg(cfg, nullptr);
    REQUIRE(traj.fields.size() == 1601);

    // (1/2)(||theta(T)||^2 - ||theta(0)||^2) = -int ||Lambda^mu theta||^2 dt
    auto lambda_mu_norm_sq = [&](const PeriodicField& f) {
        double acc = 0.0;
        for (std::size_t iy = 0; iy < 64; ++iy)
            for (std::size_t ix = 0; ix < 64; ++ix) {
                int kx = signed_mode(ix, 64), ky = signed_mode(iy, 64);
                acc += heat_multiplier(0.9, kx, ky) * std::norm(f.coeff(kx, ky));
            }
        return acc;
    };
    double dt = cfg.dt();
    double dissipation = 0.0;
    for (std::size_t i = 0; i < traj.fields.size(); ++i) {
        double w = (i == 0 || i + 1 == traj.fields.size()) ? 0.5 : 1.0;
        dissipation += w * lambda_mu_norm_sq(traj.fields[i]) * dt;
    }
    double e0 = 0.5 * std::pow(traj.fields.front().l2_norm(), 2);
    double eT = 0.5 * std::pow(traj.fields.back().l2_norm(), 2);
    double residual = std::abs((eT - e0) + dissipation) / dissipation;
    CHECK(residual < 1e-4);
}

TEST_CASE("mean mode is conserved when the noise mean is projected out") {
    SolverConfig cfg;
    cfg.mu = 0.9;
    cfg.T = 0.1;
    cfg.nt = 128;
    cfg.nx = 32;
    cfg.init = SolverConfig::Init::Field;
    PeriodicField f0(32, 32);
    for (std::size_t iy = 0; iy < 32; ++iy)
        for (std::size_t ix = 0; ix < 32; ++ix)
            f0.at(ix, iy) = 0.7 + std::sin(2 * M_PI * ix / 32.0);
    cfg.init_field = f0;

    NoiseGrid grid{cfg.nt, cfg.nx, cfg.nx, cfg.T};
    Mollifier m{MollifierProfile(), 0.25, 1.8, false};
    MollifiedNoise xe = mollify(NoiseRealization(5, grid, 0), m);
    Trajectory traj = solve_sqg(cfg, &xe.slices);
    for (const auto& f : traj.fields) CHECK(f.mean() == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("trajectories are bit-identical across reruns") {
    SolverConfig cfg;
    cfg.mu = 0.85;
    cfg.T = 0.1;
    cfg.nt = 64;
    cfg.nx = 64;
    NoiseGrid grid{cfg.nt, cfg.nx, cfg.nx, cfg.T};
    Mollifier m{MollifierProfile(), 0.2, 1.7, false};
    MollifiedNoise xe = mollify(NoiseRealization(9, grid, 2), m);
    Trajectory a = solve_sqg(cfg, &xe.slices);
    MollifiedNoise xe2 = mollify(NoiseRealization(9, grid, 2), m);
    Trajectory b = solve_sqg(cfg, &xe2.slices);
    REQUIRE(a.fields.size() == b.fields.size());
    for (std::size_t i = 0; i < a.fields.size(); ++i)
        CHECK(a.fields[i].values() == b.fields[i].values());
}

TEST_CASE("eps-convergence smoke run produces coupled decreasing differences") {
    EpsConvergenceConfig cc;
    cc.base.mu = 0.9;
    cc.base.T = 0.2;
    cc.base.nt = 128;
    cc.base.nx = 64;
    cc.base.snapshots = 17;
    cc.kappa = 0.01;
    cc.seed = 12;
    cc.compare_mollifiers = true;
    EpsConvergenceReport rep = eps_convergence(cc, {0.25, 0.125, 0.0625});
    REQUIRE(rep.rows.size() == 2);
    CHECK(!rep.any_blowup);
    for (const auto& r : rep.rows) {
        CHECK(std::isfinite(r.diff_norm));
        CHECK(r.diff_norm > 0.0);
    }
    CHECK(rep.mollifier_diff >= 0.0);
    CHECK(rep.trajectory_norm.value > 0.0);
    CHECK_THROWS(eps_convergence(cc, {0.125, 0.25}));

    // Discretization self-convergence at fixed eps: restricting the fine run
    // dominates the coarse-vs-fine difference only through resolved modes.
    SolverConfig fine = cc.base;
    NoiseGrid grid{fine.nt, fine.nx, fine.nx, fine.T};
    Mollifier m{MollifierProfile(), 0.25, 1.8, false};
    MollifiedNoise xe = mollify(NoiseRealization(12, grid, 0), m);
    Trajectory tf = solve_sqg(fine, &xe.slices);

    SolverConfig coarse = fine;
    coarse.nx = 32;
    std::vector<PeriodicField> coarse_noise;
    for (const auto& s : xe.slices) coarse_noise.push_back(restrict_field(s, 32));
    Trajectory tc = solve_sqg(coarse, &coarse_noise);

    PeriodicField diff = restrict_field(tf.fields.back(), 32) - tc.fields.back();
    double rel = diff.l2_norm() / std::max(1e-30, tc.fields.back().l2_norm());
    CHECK(rel < 0.05);
}
