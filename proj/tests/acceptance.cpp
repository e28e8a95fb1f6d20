// Acceptance suite: one check per numbered criterion, each printing a single
// PASS/FAIL line with its measured figures and wall time. Run with a criterion
// number, or with no argument for the full battery.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "sqg/io.hpp"
#include "sqg/kernels.hpp"
#include "sqg/model.hpp"
#include "sqg/noise.hpp"
#include "sqg/norms.hpp"
#include "sqg/solver.hpp"
#include "sqg/structure.hpp"

using namespace sqg;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Homogeneity form(std::int64_t c, std::int64_t m, std::int64_t k) {
    return {Rational(c), Rational(m), Rational(k)};
}

std::multiset<std::string> shape_forms(const std::vector<NegativeEntry>& entries) {
    std::multiset<std::string> out;
    for (const auto& e : entries) out.insert(e.degree.str());
    return out;
}

// ---- 1: symbol tables --------------------------------------------------------

Outcome criterion1() {
    GenerationParams p{Rational(9, 10), Rational(1, 100), 2, Rational(3), 10000, 4};
    ModelSpace space = generate(p);

    auto bar0 = collapse_shapes(space.level_bar(0), p.mu, p.kappa);
    auto tilde1 = collapse_shapes(space.level_tilde(1), p.mu, p.kappa);
    auto bar1 = collapse_shapes(space.level_bar(1), p.mu, p.kappa);
    auto tilde2 = collapse_shapes(space.level_tilde(2), p.mu, p.kappa);

    bool ok = bar0.size() == 1 && bar0[0].text == "I[Xi]" && bar0[0].degree == form(-1, 1, -1);
    ok = ok && tilde1.size() == 2 &&
         shape_forms(tilde1) == std::multiset<std::string>{form(-1, 1, -1).str(),
                                                           form(-2, 2, -2).str()};
    ok = ok && bar1.size() == 2 &&
         shape_forms(bar1) == std::multiset<std::string>{form(-2, 3, -1).str(),
                                                         form(-3, 4, -2).str()};
    std::multiset<std::string> want2{form(-2, 3, -1).str(), form(-3, 4, -2).str(),
                                     form(-3, 4, -2).str(), form(-4, 5, -3).str(),
                                     form(-4, 6, -2).str(), form(-5, 7, -3).str(),
                                     form(-5, 7, -3).str(), form(-6, 8, -4).str()};
    ok = ok && tilde2.size() == 8 && shape_forms(tilde2) == want2;

    std::ostringstream os;
    os << "tables sized " << bar0.size() << "/" << tilde1.size() << "/" << bar1.size() << "/"
       << tilde2.size() << ", exact rational forms";
    return {ok, os.str()};
}

// ---- 2: negative table ----------------------------------------------------------

Outcome criterion2() {
    GenerationParams p{Rational(9, 10), Rational(1, 100), 3, {}, 10000, 4};
    ModelSpace space = generate(p);
    NegativeTable t = negative_symbols(space);

    std::multiset<std::string> want{form(-1, 1, -1).str(), form(-1, 1, -1).str(),
                                    form(-2, 2, -2).str(), form(-2, 2, -2).str()};
    bool ok = t.display.size() == 4 && shape_forms(t.display) == want;
    ok = ok && t.min_degree == form(-2, 2, -2);

    Rational min_val(1);
    bool first = true;
    for (const auto& s : space.symbols) {
        Rational v = s.degree.eval(p.mu, p.kappa);
        if (first || v < min_val) { min_val = v; first = false; }
    }
    ok = ok && min_val == form(-2, 2, -2).eval(p.mu, p.kappa);

    std::ostringstream os;
    os << "display entries " << t.display.size() << ", min form " << t.min_degree.str()
       << " (indexed " << t.indexed.size() << ", shapes " << t.shapes.size() << ")";
    return {ok, os.str()};
}

// ---- 3: subcriticality -----------------------------------------------------------

Outcome criterion3() {
    struct Case { Rational mu; bool want; };
    std::vector<Case> cases{{Rational(1, 2), false}, {Rational(2, 3), false},
                            {Rational(7, 10), true}, {Rational(1), true}};
    bool ok = true;
    for (const auto& c : cases) {
        SubcriticalityResult r = is_subcritical(c.mu);
        Rational expect = Rational(3) * c.mu - Rational(2);
        ok = ok && r.subcritical == c.want && r.increment_value == expect;
    }
    return {ok, "threshold decided symbolically from the increment form 3m-2 at {1/2,2/3,7/10,1}"};
}

// ---- 4: white-noise isometry -------------------------------------------------------

Outcome criterion4() {
    NoiseGrid grid{16, 64, 64, 1.0};
    auto sample = [&](const std::function<double(double, double, double)>& f) {
        std::vector<double> w;
        w.reserve(grid.nt * grid.nx * grid.ny);
        for (std::size_t it = 0; it < grid.nt; ++it)
            for (std::size_t iy = 0; iy < grid.ny; ++iy)
                for (std::size_t ix = 0; ix < grid.nx; ++ix)
                    w.push_back(f((it + 0.5) * grid.dt(), (ix + 0.5) * grid.dx(),
                                  (iy + 0.5) * grid.dy()));
        return w;
    };
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    pairs.emplace_back(
        sample([](double, double x, double y) { return std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y); }),
        sample([](double, double x, double y) {
            return std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y) + 0.5 * std::cos(4 * M_PI * y);
        }));
    pairs.emplace_back(
        sample([](double t, double, double y) { return std::cos(2 * M_PI * t) * std::sin(2 * M_PI * y); }),
        sample([](double t, double, double y) {
            return std::sin(2 * M_PI * y) * (0.3 + std::cos(2 * M_PI * t));
        }));
    pairs.emplace_back(
        sample([](double t, double x, double) { return x < 0.4 ? 1.0 + t : 0.0; }),
        sample([](double t, double x, double) { return x > 0.6 ? 1.0 - t : 0.0; }));
    pairs.emplace_back(
        sample([](double, double x, double y) {
            double dx = x - 0.5, dy = y - 0.5;
            return std::exp(-40.0 * (dx * dx + dy * dy));
        }),
        sample([](double, double x, double y) {
            double dx = x - 0.55, dy = y - 0.5;
            return std::exp(-40.0 * (dx * dx + dy * dy));
        }));
    pairs.emplace_back(
        sample([](double t, double x, double y) {
            return std::sin(2 * M_PI * (x + y)) * std::sin(2 * M_PI * t);
        }),
        sample([](double t, double x, double y) {
            return std::sin(2 * M_PI * (x + y)) * std::sin(2 * M_PI * t) * 0.8;
        }));

    double dv = grid.cell_volume();
    std::vector<double> want;
    for (const auto& [a, b] : pairs) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        want.push_back(s * dv);
    }

    const int n = 10000;
    std::vector<double> s1(pairs.size(), 0.0), s2(pairs.size(), 0.0);
    for (int r = 0; r < n; ++r) {
        NoiseRealization xi(2024, grid, static_cast<std::uint64_t>(r));
        // One pass over the cells serves every probe pair.
        std::vector<double> pa(pairs.size(), 0.0), pb(pairs.size(), 0.0);
        std::size_t idx = 0;
        for (std::size_t it = 0; it < grid.nt; ++it)
            for (std::size_t iy = 0; iy < grid.ny; ++iy)
                for (std::size_t ix = 0; ix < grid.nx; ++ix, ++idx) {
                    double c = xi.cell(it, ix, iy);
                    for (std::size_t q = 0; q < pairs.size(); ++q) {
                        pa[q] += c * pairs[q].first[idx];
                        pb[q] += c * pairs[q].second[idx];
                    }
                }
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            double v = (pa[q] * dv) * (pb[q] * dv);
            s1[q] += v;
            s2[q] += v * v;
        }
    }
    bool ok = true;
    std::ostringstream os;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
        double mean = s1[q] / n;
        double se = std::sqrt(std::max(0.0, s2[q] / n - mean * mean) / n);
        bool this_ok = std::abs(mean - want[q]) < 3.0 * se;
        ok = ok && this_ok;
        os << "pair" << q + 1 << " dev/se=" << (se > 0 ? std::abs(mean - want[q]) / se : 0.0) << " ";
    }
    return {ok, os.str()};
}

// ---- 5: noise regularity ------------------------------------------------------------

Outcome criterion5() {
    NoiseGrid grid{512, 64, 64, 0.75};
    std::vector<double> lambdas{0.5, 0.297, 0.177, 0.105, 0.0625};
    ScalingFit fit = noise_regularity_fit(31, grid, 0.9, lambdas, 800);
    double target = -(2.0 + 2.0 * 0.9);
    bool ok = std::abs(fit.slope - target) <= 0.15;
    std::ostringstream os;
    os << "slope " << fit.slope << " vs -(2+2mu) = " << target << " (tolerance 0.15)";
    return {ok, os.str()};
}

// ---- 6: kernel orders ---------------------------------------------------------------

Outcome criterion6() {
    KernelContext ctx(0.9);
    std::vector<double> order_radii;
    for (int i = 0; i < 9; ++i) order_radii.push_back(0.5 * std::pow(2.0, -i * 0.5));
    std::vector<double> conv_radii{0.4, 0.25, 0.16, 0.1, 0.063, 0.04};

    ScalingFit fk = kernel_order_fit(ctx, KernelSpec::fractional_heat(0.9), {0, 0, 0}, order_radii);
    ScalingFit fr = kernel_order_fit(ctx, KernelSpec::riesz_heat(1, 0.9), {0, 0, 0}, order_radii);
    ScalingFit fc = convolution_order_fit(ctx, KernelSpec::fractional_heat(0.9),
                                          KernelSpec::fractional_heat(0.9), conv_radii, false);
    ScalingFit fp = convolution_product_order_fit(
        ctx, KernelSpec::riesz_heat(1, 0.9), KernelSpec::riesz_heat(1, 0.9),
        KernelSpec::fractional_heat(0.9), KernelSpec::fractional_heat(0.9), conv_radii);

    bool ok = std::abs(fk.slope - (-2.0)) <= 0.15 && std::abs(fr.slope - (-2.0)) <= 0.15 &&
              std::abs(fc.slope - (-0.2)) <= 0.2 && std::abs(fp.slope - (-0.4)) <= 0.3;
    std::ostringstream os;
    os << "K " << fk.slope << " (-2 +/- 0.15), RK " << fr.slope << " (-2 +/- 0.15), K*K "
       << fc.slope << " (-0.2 +/- 0.2), product " << fp.slope << " (-0.4 +/- 0.3)";
    return {ok, os.str()};
}

// ---- 7: mollified kernel bounds ------------------------------------------------------

Outcome criterion7() {
    KernelContext ctx(0.9);
    std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
    MollifiedCheckReport rep = mollified_kernel_check(
        ctx, KernelSpec::fractional_heat(0.9), MollifierProfile::Shape::Exponential, eps, 0.5);
    bool ok = rep.bound_spread < 3.0 && rep.diff_spread < 3.0 && !rep.flagged;
    std::ostringstream os;
    os << "bound-ratio spread " << rep.bound_spread << ", difference-ratio spread "
       << rep.diff_spread << " (cap 3)";
    return {ok, os.str()};
}

// ---- 8: renormalization constant ------------------------------------------------------

Outcome criterion8() {
    ModelParams p;
    p.mu = 0.9;
    p.kappa = 0.0;
    p.grid = NoiseGrid{512, 64, 64, 1.0};
    p.seed = 7;
    RenormEpsReport rep = renorm_eps_report(p, {0.25, 0.125, 0.0625});
    bool ok = true;
    double scale = 0.0;
    for (const auto& c : rep.constants) scale = std::max(scale, c.unsigned_integral);
    for (std::size_t i = 0; i + 1 < rep.constants.size(); i += 2) {
        const auto& c1 = rep.constants[i];
        const auto& c2 = rep.constants[i + 1];
        ok = ok && std::abs(c1.value - c2.value) < 1e-10 * scale;
        ok = ok && c1.max_slice_integral < 1e-10 * scale; // per-slice odd-even probe
    }
    std::ostringstream os;
    os << "|C1-C2| and per-slice integrals at the quadrature floor (max |C| = "
       << rep.max_abs_value << "); unsigned-trend slope " << rep.unsigned_fit.slope
       << " vs the claimed " << rep.claimed_exponent << " (documented, not asserted)";
    return {ok, os.str()};
}

// ---- 9: model scaling -----------------------------------------------------------------

Outcome criterion9() {
    ModelParams p;
    p.mu = 0.9;
    p.kappa = 0.0;
    p.eps = 1.0 / 128.0;
    p.grid = NoiseGrid{436, 256, 256, 0.02};
    p.seed = 11;
    McParams mc;
    mc.lambdas = {0.5, 0.25, 0.125, 0.0625, 0.03125};
    mc.max_samples = 2000;
    mc.stderr_stop_frac = 0.06;
    mc.threads = 2;
    auto xi = Symbol::xi_integral();
    auto prod = Symbol::product({Symbol::riesz(1, xi), xi});
    auto results = scaling_mc(p, {xi, prod}, mc);

    bool ok = true;
    std::ostringstream os;
    for (const auto& r : results) {
        bool this_ok = r.fit.slope >= r.slope_target - 0.3;
        ok = ok && this_ok && !r.power_warning;
        os << r.symbol << ": slope " << r.fit.slope << " >= " << r.slope_target - 0.3 << " (n="
           << r.rows[0].n << ") ";
    }
    return {ok, os.str()};
}

// ---- 10: time regularity -----------------------------------------------------------------

Outcome criterion10() {
    ModelParams p;
    p.mu = 0.9;
    p.kappa = 0.0;
    p.eps = 1.0 / 32.0;
    p.grid = NoiseGrid{96, 64, 64, 0.05};
    p.seed = 13;
    McParams mc;
    mc.max_samples = 2000;
    mc.stderr_stop_frac = 0.06;
    mc.threads = 2;
    double lambda = 0.125, delta = 0.3;
    double dt = p.dt();
    std::vector<double> incs{45 * dt, 22 * dt, 11 * dt, 6 * dt};
    TimeRegResult res = time_regularity_mc(p, Symbol::xi_integral(), lambda, delta, incs, mc);
    bool ok = res.fit.slope >= res.slope_target - 0.2 && !res.power_warning;
    std::ostringstream os;
    os << "increment slope " << res.fit.slope << " >= 2 delta/s0 - 0.2 = "
       << res.slope_target - 0.2 << " (n=" << res.rows[0].n << ")";
    return {ok, os.str()};
}

// ---- 11: Wick isometry ---------------------------------------------------------------------

Outcome criterion11() {
    NoiseGrid grid{8, 32, 32, 1.0};
    auto sample = [&](const std::function<double(double, double, double)>& f) {
        std::vector<double> w;
        for (std::size_t it = 0; it < grid.nt; ++it)
            for (std::size_t iy = 0; iy < grid.ny; ++iy)
                for (std::size_t ix = 0; ix < grid.nx; ++ix)
                    w.push_back(f((it + 0.5) * grid.dt(), (ix + 0.5) * grid.dx(),
                                  (iy + 0.5) * grid.dy()));
        return w;
    };
    bool ok = true;
    std::ostringstream os;
    std::uint64_t key = rng::derive_key(909, 4);
    std::uint64_t ctr = 0;
    for (int q = 0; q < 10; ++q) {
        // Random smooth two-argument function with disjoint Fourier content in
        // the two slots, so the second-moment bound is sharp.
        SeparableKernel f;
        for (int j = 0; j < 5; ++j) {
            SeparableKernel::Term term;
            term.weight = 2.0 * rng::uniform(key, ctr++) - 1.0;
            int kg = 1 + static_cast<int>(3.0 * rng::uniform(key, ctr++));
            int kh = 1 + static_cast<int>(3.0 * rng::uniform(key, ctr++));
            double ph = rng::uniform(key, ctr++);
            term.g = sample([=](double t, double x, double y) {
                return std::sin(2 * M_PI * kg * x + ph) * std::cos(2 * M_PI * (t + y));
            });
            term.h = sample([=](double t, double x, double y) {
                return std::cos(2 * M_PI * kh * y + ph) * std::sin(2 * M_PI * (x + 0.3 * t));
            });
            f.terms.push_back(std::move(term));
        }
        ChaosEstimate est = chaos_i2_estimate(909 + q, grid, f, 1200);
        bool this_ok = est.second_moment <= est.f_norm_sq + 3.0 * est.stderr_second;
        ok = ok && this_ok;
        os << (this_ok ? "+" : "-");
    }
    os << " (10 random smooth f, E[I2^2] <= |f|^2 + 3 se)";
    return {ok, os.str()};
}

// ---- 12: solver validation ---------------------------------------------------------------------

Outcome criterion12() {
    // Exact single-mode decay.
    SolverConfig cfg;
    cfg.mu = 0.9;
    cfg.T = 0.5;
    cfg.nt = 256;
    cfg.nx = 64;
    cfg.init = SolverConfig::Init::Mode;
    Trajectory traj = solve_sqg(cfg, nullptr);
    double decay = std::exp(-0.5 * std::pow(2.0 * M_PI, 1.8));
    double mode_err = 0.0;
    for (std::size_t ix = 0; ix < 64; ++ix)
        mode_err = std::max(mode_err, std::abs(traj.fields.back()(ix, 3) -
                                               decay * std::cos(2 * M_PI * ix / 64.0)));

    // Dealiased divergence form vs advective form.
    PeriodicField theta(128, 128);
    std::uint64_t key = rng::derive_key(5150, 1);
    std::uint64_t ctr = 0;
    for (int kx = -10; kx <= 10; ++kx)
        for (int ky = 1; ky <= 10; ++ky) {
            double a = 2.0 * rng::uniform(key, ctr++) - 1.0;
            double b = 2.0 * rng::uniform(key, ctr++) - 1.0;
            for (std::size_t iy = 0; iy < 128; ++iy)
                for (std::size_t ix = 0; ix < 128; ++ix) {
                    double ph = 2 * M_PI * (kx * (ix / 128.0) + ky * (iy / 128.0));
                    theta.at(ix, iy) += 0.05 * (a * std::cos(ph) + b * std::sin(ph));
                }
        }
    double form_err = (sqg_nonlinearity(theta, 2.0 / 3.0) -
                       sqg_nonlinearity_advective(theta, 2.0 / 3.0)).max_abs();

    // Zero-noise energy balance.
    SolverConfig ecfg;
    ecfg.mu = 0.9;
    ecfg.T = 0.02;
    ecfg.nt = 3200;
    ecfg.nx = 64;
    ecfg.snapshots = 3201;
    ecfg.init = SolverConfig::Init::Field;
    ecfg.init_field = restrict_field(theta, 64);
    Trajectory etraj = solve_sqg(ecfg, nullptr);
    auto lam_sq = [&](const PeriodicField& f) {
        double acc = 0.0;
        for (std::size_t iy = 0; iy < 64; ++iy)
            for (std::size_t ix = 0; ix < 64; ++ix)
                acc += heat_multiplier(0.9, signed_mode(ix, 64), signed_mode(iy, 64)) *
                       std::norm(f.coeff(signed_mode(ix, 64), signed_mode(iy, 64)));
        return acc;
    };
    double dissipation = 0.0;
    for (std::size_t i = 0; i < etraj.fields.size(); ++i) {
        double w = (i == 0 || i + 1 == etraj.fields.size()) ? 0.5 : 1.0;
        dissipation += w * lam_sq(etraj.fields[i]) * ecfg.dt();
    }
    double e0 = 0.5 * std::pow(etraj.fields.front().l2_norm(), 2);
    double eT = 0.5 * std::pow(etraj.fields.back().l2_norm(), 2);
    double balance = std::abs((eT - e0) + dissipation) / dissipation;

    bool ok = mode_err < 1e-6 && form_err < 1e-8 && balance < 1e-4;
    std::ostringstream os;
    os << "mode decay err " << mode_err << " (<1e-6), form agreement " << form_err
       << " (<1e-8), energy residual " << balance << " (<1e-4)";
    return {ok, os.str()};
}

// ---- 13: eps-convergence ---------------------------------------------------------------------

Outcome criterion13() {
    EpsConvergenceConfig cc;
    cc.base.mu = 0.9;
    cc.base.T = 0.4;
    cc.base.nt = 720;
    cc.base.nx = 128;
    cc.base.snapshots = 33;
    cc.kappa = 0.01;
    cc.seed = 41;
    cc.compare_mollifiers = true;
    EpsConvergenceReport rep = eps_convergence(cc, {0.25, 0.125, 0.0625, 0.03125});

    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
        decreasing = decreasing && rep.rows[i + 1].diff_norm < rep.rows[i].diff_norm;
    double d_last = rep.rows.back().diff_norm;
    bool moll_ok = rep.mollifier_diff <= 2.0 * d_last;
    bool ok = decreasing && moll_ok && !rep.any_blowup;

    std::ostringstream os;
    os << "D_k = ";
    for (const auto& r : rep.rows) os << r.diff_norm << " ";
    os << "(strictly decreasing: " << (decreasing ? "yes" : "no") << "), mollifier diff "
       << rep.mollifier_diff << " <= 2 D_last = " << 2.0 * d_last;
    return {ok, os.str()};
}

// ---- 14: reconstruction defect ----------------------------------------------------------------

Outcome criterion14() {
    ModelParams p;
    p.mu = 0.9;
    p.kappa = 0.01;
    p.eps = 1.0 / 16.0;
    p.grid = NoiseGrid{128, 128, 128, 0.2};
    p.seed = 17;
    std::vector<double> lambdas{0.5, 0.35, 0.25, 0.177, 0.125, 0.0884, 0.0625};
    DefectFitResult res = reconstruction_defect_fit(p, lambdas, 16);
    double gamma = res.gamma_target;
    bool ok = res.fit.slope >= gamma - 0.2;
    std::ostringstream os;
    os << "defect slope " << res.fit.slope << " >= gamma - 0.2 = " << gamma - 0.2
       << " (gamma = 1+2kappa-mu = " << gamma << ")";
    return {ok, os.str()};
}

// ---- 15: determinism ---------------------------------------------------------------------------

Outcome criterion15() {
    const char* cli = std::getenv("SQG_CLI");
    if (!cli) return {false, "SQG_CLI not set"};
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "sqg_acceptance_c15";
    fs::remove_all(base);
    fs::create_directories(base);

    struct Run { std::string name, args; };
    std::vector<Run> runs{
        {"negatives", "structure negatives --mu 9/10 --kappa 1/100 --seed 3"},
        {"noise", "noise sample --grid 32x32x8 --seed 9"},
        {"solve", "solve --mu 0.9 --grid 32x32x64 --T 0.1 --eps 0.25 --seed 4"},
        {"scaling", "model scaling --grid 32x32x48 --T 0.05 --eps 0.125 --seed 5 --samples 64 "
                     "--lambda-list 0.25,0.125 --set model.check_every=64 --set model.threads=2"},
    };
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : runs) {
        std::string out1 = (base / (r.name + "_a")).string();
        std::string out2 = (base / (r.name + "_b")).string();
        std::string log = (base / "log").string();
        int rc1 = std::system((std::string(cli) + " " + r.args + " --out " + out1 + " > " + log +
                               " 2>&1").c_str());
        int rc2 = std::system((std::string(cli) + " rerun " + out1 + "/manifest.json --out " +
                               out2 + " > " + log + " 2>&1").c_str());
        bool this_ok = WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0;
        if (this_ok) {
            Manifest a = read_manifest(out1 + "/manifest.json");
            Manifest b = read_manifest(out2 + "/manifest.json");
            this_ok = a.artifacts == b.artifacts && verify_manifest(out1).ok && verify_manifest(out2).ok;
        }
        ok = ok && this_ok;
        os << r.name << (this_ok ? " ok; " : " FAILED; ");
    }
    fs::remove_all(base);
    return {ok, os.str()};
}

struct Criterion {
    int id;
    const char* title;
    Outcome (*fn)();
    double budget_minutes;
};

const Criterion kCriteria[] = {
    {1, "symbol tables reproduce the generation lists exactly", criterion1, 1.0},
    {2, "negative-degree table at mu=9/10, kappa=1/100", criterion2, 1.0},
    {3, "subcriticality threshold decided symbolically", criterion3, 1.0},
    {4, "white-noise pairing isometry (10^4 realizations)", criterion4, 1.0},
    {5, "noise probe-moment slope", criterion5, 2.0},
    {6, "kernel order fits", criterion6, 5.0},
    {7, "mollified kernel bounds uniform over eps", criterion7, 2.0},
    {8, "renormalization constants: symmetry and eps report", criterion8, 2.0},
    {9, "model pairing-moment slopes", criterion9, 10.0},
    {10, "model time-increment slopes", criterion10, 10.0},
    {11, "second-chaos second-moment bound", criterion11, 2.0},
    {12, "solver validation", criterion12, 1.0},
    {13, "coupled eps-convergence differences", criterion13, 15.0},
    {14, "reconstruction defect slope", criterion14, 10.0},
    {15, "manifest-driven bit-identical reruns", criterion15, 5.0},
};

bool run_criterion(const Criterion& c) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = c.fn();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    bool in_budget = minutes <= c.budget_minutes;
    bool pass = out.pass && in_budget;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.title << " -- "
              << out.detail << " [" << minutes * 60.0 << " s";
    if (!in_budget) std::cout << ", over the " << c.budget_minutes << " min budget";
    std::cout << "]" << std::endl;
    return pass;
}

} // namespace

int main(int argc, char** argv) {
    bool all_ok = true;
    if (argc > 1) {
        int want = std::atoi(argv[1]);
        bool found = false;
        for (const auto& c : kCriteria)
            if (c.id == want) {
                all_ok = run_criterion(c);
                found = true;
            }
        if (!found) {
            std::cerr << "no criterion " << want << "\n";
            return 2;
        }
    } else {
        for (const auto& c : kCriteria) all_ok = run_criterion(c) && all_ok;
    }
    return all_ok ? 0 : 1;
}
