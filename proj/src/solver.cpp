#include "sqg/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "sqg/kernels.hpp"

namespace sqg {

namespace {

void dealias_spectrum(std::vector<cplx>& c, std::size_t nx, double frac) {
    int cut = static_cast<int>(frac * static_cast<double>(nx) / 2.0);
    for (std::size_t iy = 0; iy < nx; ++iy) {
        int ky = signed_mode(iy, nx);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            int kx = signed_mode(ix, nx);
            if (std::abs(kx) > cut || std::abs(ky) > cut) c[ix + nx * iy] = 0.0;
        }
    }
}

PeriodicField dealias(const PeriodicField& f, double frac) {
    std::vector<cplx> c = f.spectrum();
    dealias_spectrum(c, f.nx(), frac);
    return PeriodicField::from_spectrum(f.nx(), f.ny(), std::move(c));
}

PeriodicField spectral_derivative(const PeriodicField& f, int j) {
    std::size_t nx = f.nx();
    return apply_multiplier(f, [&](int kx, int ky) -> cplx {
        if (kx == -static_cast<int>(nx / 2) || ky == -static_cast<int>(nx / 2)) return 0.0;
        return cplx(0.0, 2.0 * M_PI * (j == 1 ? kx : ky));
    });
}

} // namespace

std::pair<PeriodicField, PeriodicField> riesz_velocity(const PeriodicField& theta) {
    PeriodicField u1 = riesz_apply(2, theta);
    u1 *= -1.0;
    return {std::move(u1), riesz_apply(1, theta)};
}

PeriodicField sqg_nonlinearity(const PeriodicField& theta, double frac) {
    PeriodicField th = dealias(theta, frac);
    auto [u1, u2] = riesz_velocity(th);
    PeriodicField p1 = dealias(PeriodicField::pointwise(th, u1), frac);
    PeriodicField p2 = dealias(PeriodicField::pointwise(th, u2), frac);
    PeriodicField d1 = spectral_derivative(p1, 1);
    d1 += spectral_derivative(p2, 2);
    return d1;
}

PeriodicField sqg_nonlinearity_advective(const PeriodicField& theta, double frac) {
    PeriodicField th = dealias(theta, frac);
    auto [u1, u2] = riesz_velocity(th);
    PeriodicField g1 = spectral_derivative(th, 1);
    PeriodicField g2 = spectral_derivative(th, 2);
    PeriodicField adv = PeriodicField::pointwise(u1, g1);
    adv += PeriodicField::pointwise(u2, g2);
    return dealias(adv, frac);
}

const PeriodicField& Trajectory::at_time(double t) const {
    if (fields.empty()) throw std::runtime_error("Trajectory::at_time: empty trajectory");
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return fields[best];
}

Trajectory solve_sqg(const SolverConfig& cfg, const std::vector<PeriodicField>* noise_slices) {
    const std::size_t nx = cfg.nx;
    if (!is_pow2(nx)) throw std::invalid_argument("solve_sqg: nx must be a power of two");
    if (noise_slices && noise_slices->size() < cfg.nt)
        throw std::invalid_argument("solve_sqg: noise slices do not cover the time grid");
    if (noise_slices && !noise_slices->empty() && (*noise_slices)[0].nx() != nx)
        throw std::invalid_argument("solve_sqg: noise grid mismatch");

    double dt = cfg.dt();
    // Per-mode exact propagator and forcing weight of the linear part.
    std::vector<double> prop(nx * nx), force(nx * nx);
    for (std::size_t iy = 0; iy < nx; ++iy) {
        int ky = signed_mode(iy, nx);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            int kx = signed_mode(ix, nx);
            double a = heat_multiplier(cfg.mu, kx, ky);
            prop[ix + nx * iy] = std::exp(-a * dt);
            force[ix + nx * iy] = a > 0.0 ? (1.0 - std::exp(-a * dt)) / a : dt;
        }
    }

    PeriodicField theta(nx, nx);
    switch (cfg.init) {
        case SolverConfig::Init::Zero: break;
        case SolverConfig::Init::Mode: {
            for (std::size_t iy = 0; iy < nx; ++iy)
                for (std::size_t ix = 0; ix < nx; ++ix)
                    theta.at(ix, iy) = cfg.mode_amp *
                        std::cos(2.0 * M_PI * (cfg.mode_kx * (double(ix) / nx) +
                                               cfg.mode_ky * (double(iy) / nx)));
            break;
        }
        case SolverConfig::Init::Field:
            if (!cfg.init_field) throw std::invalid_argument("solve_sqg: missing init field");
            theta = *cfg.init_field;
            break;
    }

    Trajectory traj;
    traj.cfl_ratio = cfg.cfl_ratio();
    std::size_t snap_every = std::max<std::size_t>(1, cfg.nt / std::max<std::size_t>(1, cfg.snapshots - 1));
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.fields.push_back(theta);
    };
    record(0.0);

    std::vector<cplx> that = theta.spectrum();
    for (std::size_t n = 0; n < cfg.nt; ++n) {
        PeriodicField nl = sqg_nonlinearity(theta, cfg.dealias_frac);
        std::vector<cplx> fhat = nl.spectrum();
        for (auto& c : fhat) c = -c;
        if (noise_slices) {
            const std::vector<cplx>& xh = (*noise_slices)[n].spectrum();
            for (std::size_t k = 0; k < fhat.size(); ++k) fhat[k] += xh[k];
            if (cfg.project_noise_mean) fhat[0] -= xh[0];
        }
        for (std::size_t k = 0; k < that.size(); ++k)
            that[k] = prop[k] * that[k] + force[k] * fhat[k];

        theta = PeriodicField::from_spectrum(nx, nx, that);
        traj.max_imag_residue = std::max(traj.max_imag_residue, theta.reality_residue());

        double t = (n + 1) * dt;
        if (theta.max_abs() > cfg.blowup_cap) {
            traj.blew_up = true;
            traj.blowup_time = t;
            record(t);
            return traj;
        }
        if ((n + 1) % snap_every == 0 || n + 1 == cfg.nt) record(t);
    }

    // Divergence-free diagnostic of the final velocity.
    auto [u1, u2] = riesz_velocity(theta);
    double dmax = 0.0;
    for (std::size_t iy = 0; iy < nx; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            int kx = signed_mode(ix, nx), ky = signed_mode(iy, nx);
            dmax = std::max(dmax, std::abs(double(kx) * u1.coeff(kx, ky) +
                                           double(ky) * u2.coeff(kx, ky)));
        }
    traj.max_divergence = dmax;
    return traj;
}

PeriodicField restrict_field(const PeriodicField& f, std::size_t nx_coarse) {
    std::size_t nx = f.nx();
    if (nx_coarse > nx) throw std::invalid_argument("restrict_field: target finer than source");
    const std::vector<cplx>& c = f.spectrum();
    std::vector<cplx> out(nx_coarse * nx_coarse, 0.0);
    int cut = static_cast<int>(nx_coarse) / 2;
    for (std::size_t iy = 0; iy < nx_coarse; ++iy) {
        int ky = signed_mode(iy, nx_coarse);
        if (ky == -cut) continue; // drop the unpaired row
        for (std::size_t ix = 0; ix < nx_coarse; ++ix) {
            int kx = signed_mode(ix, nx_coarse);
            if (kx == -cut) continue;
            std::size_t sx = static_cast<std::size_t>((kx + static_cast<int>(nx)) % static_cast<int>(nx));
            std::size_t sy = static_cast<std::size_t>((ky + static_cast<int>(nx)) % static_cast<int>(nx));
            out[ix + nx_coarse * iy] = c[sx + nx * sy];
        }
    }
    return PeriodicField::from_spectrum(nx_coarse, nx_coarse, std::move(out));
}

EpsConvergenceReport eps_convergence(const EpsConvergenceConfig& cfg,
                                     const std::vector<double>& eps_list) {
    if (eps_list.size() < 2) throw std::invalid_argument("eps_convergence: need >= 2 eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("eps_convergence: eps must decrease strictly");

    const SolverConfig& base = cfg.base;
    double s0 = 2.0 * base.mu;
    NoiseGrid grid{base.nt, base.nx, base.nx, base.T};
    NoiseRealization xi(cfg.seed, grid, 0);

    EpsConvergenceReport rep;
    rep.eps_list = eps_list;
    rep.alpha = -2.0 + 2.0 * base.mu - 2.0 * cfg.kappa;
    rep.t_star = base.T / 4.0;
    rep.delta_bar = 0.5 * (3.0 * base.mu - 2.0 - cfg.kappa);

    // Successive differences are compared at scales above the mollification
    // bands, where the coupling's decay dominates the band-realization noise.
    BesovParams bp{{0.5, 0.25}, 192, cfg.seed + 17};
    BesovParams traj_bp{{0.5, 0.25, 0.125, 0.0625}, 64, cfg.seed + 17};

    std::vector<Trajectory> runs;
    for (double eps : eps_list) {
        Mollifier m{MollifierProfile(), eps, s0, false};
        MollifiedNoise xe = mollify(xi, m);
        runs.push_back(solve_sqg(base, &xe.slices));
        rep.any_blowup = rep.any_blowup || runs.back().blew_up;
    }

    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        PeriodicField diff = runs[k + 1].at_time(rep.t_star) - runs[k].at_time(rep.t_star);
        rep.rows.push_back({eps_list[k + 1], besov_norm(diff, rep.alpha, bp).value});
    }

    if (cfg.compare_mollifiers) {
        Mollifier m2{MollifierProfile(MollifierProfile::Shape::PolynomialC3), eps_list.back(), s0,
                     false};
        MollifiedNoise xe2 = mollify(xi, m2);
        Trajectory other = solve_sqg(base, &xe2.slices);
        PeriodicField diff = other.at_time(rep.t_star) - runs.back().at_time(rep.t_star);
        rep.mollifier_diff = besov_norm(diff, rep.alpha, bp).value;
        rep.any_blowup = rep.any_blowup || other.blew_up;
    }

    // Weighted time-Hoelder record of the smallest-eps trajectory on (0,T].
    const Trajectory& fine = runs.back();
    std::vector<double> times;
    std::vector<PeriodicField> fields;
    for (std::size_t i = 0; i < fine.times.size(); ++i) {
        if (fine.times[i] <= 0.0) continue;
        times.push_back(fine.times[i]);
        fields.push_back(fine.fields[i]);
    }
    WeightedNormParams wp;
    wp.delta = rep.delta_bar;
    wp.alpha = rep.alpha;
    wp.eta = cfg.eta_initial - 1.0 + base.mu - 2.0 * cfg.kappa;
    wp.T = base.T;
    wp.s0 = s0;
    wp.besov = traj_bp;
    if (times.size() >= 8) rep.trajectory_norm = weighted_time_norm(times, fields, wp);
    return rep;
}

} // namespace sqg
