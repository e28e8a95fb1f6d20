#include "sqg/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace sqg {

double NoiseRealization::pair(const std::function<double(double, double, double)>& phi) const {
    double acc = 0.0;
    for (std::size_t it = 0; it < grid_.nt; ++it) {
        double t = (it + 0.5) * grid_.dt();
        for (std::size_t iy = 0; iy < grid_.ny; ++iy) {
            double y = (iy + 0.5) * grid_.dy();
            for (std::size_t ix = 0; ix < grid_.nx; ++ix) {
                double x = (ix + 0.5) * grid_.dx();
                double w = phi(t, x, y);
                if (w != 0.0) acc += cell(it, ix, iy) * w;
            }
        }
    }
    return acc * grid_.cell_volume();
}

double NoiseRealization::pair_weights(const std::vector<double>& w) const {
    double acc = 0.0;
    std::size_t idx = 0;
    for (std::size_t it = 0; it < grid_.nt; ++it)
        for (std::size_t iy = 0; iy < grid_.ny; ++iy)
            for (std::size_t ix = 0; ix < grid_.nx; ++ix, ++idx)
                if (w[idx] != 0.0) acc += cell(it, ix, iy) * w[idx];
    return acc * grid_.cell_volume();
}

MollifierSpectra mollifier_spectra(const NoiseGrid& grid, const Mollifier& m) {
    if (m.eps < 2.0 * std::max(std::pow(grid.dt(), 1.0 / m.s0), grid.dx()))
        throw std::invalid_argument("mollify: eps is not resolved by the grid");

    MollifierSpectra sp;
    sp.reach = static_cast<long>(std::ceil(m.time_scale() / grid.dt())) + 1;
    std::size_t nx = grid.nx, ny = grid.ny;
    sp.rho_hat.resize(2 * sp.reach + 1);
    sp.nonzero.assign(2 * sp.reach + 1, false);
    for (long j = -sp.reach; j <= sp.reach; ++j) {
        double tau = j * grid.dt();
        PeriodicField r(nx, ny);
        bool any = false;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            double y = wrapped_delta(iy, 0.0, ny);
            for (std::size_t ix = 0; ix < nx; ++ix) {
                double x = wrapped_delta(ix, 0.0, nx);
                double v = m(tau, x, y);
                if (v != 0.0) any = true;
                r.at(ix, iy) = v;
            }
        }
        sp.nonzero[j + sp.reach] = any;
        if (any) sp.rho_hat[j + sp.reach] = r.spectrum();
    }
    // Normalize the sampled kernel to exact unit discrete mass, the grid
    // analogue of the profile's unit integral; means are then preserved.
    double mass = 0.0;
    for (long j = -sp.reach; j <= sp.reach; ++j)
        if (sp.nonzero[j + sp.reach]) mass += sp.rho_hat[j + sp.reach][0].real() * grid.dt();
    if (mass <= 0.0) throw std::invalid_argument("mollify: sampled kernel has no mass");
    for (auto& rh : sp.rho_hat)
        for (auto& c : rh) c /= mass;

    // Factored form: the profile separates in time and space, so each offset's
    // spectrum is a scalar multiple of the central spatial spectrum.
    sp.time_weight.assign(2 * sp.reach + 1, 0.0);
    long center = sp.reach;
    while (!sp.nonzero[center]) ++center; // the zero offset always carries mass
    sp.spatial_hat = sp.rho_hat[center];
    double ref = sp.spatial_hat[0].real();
    for (long j = 0; j <= 2 * sp.reach; ++j)
        if (sp.nonzero[j]) sp.time_weight[j] = sp.rho_hat[j][0].real() / ref;
    return sp;
}

std::vector<PeriodicField> mollify_slices(const NoiseGrid& grid,
                                          const std::function<PeriodicField(long)>& slice_at,
                                          const Mollifier& m) {
    MollifierSpectra sp = mollifier_spectra(grid, m);
    long reach = sp.reach;
    std::size_t nx = grid.nx, ny = grid.ny;

    std::vector<PeriodicField> out;
    out.reserve(grid.nt);
    std::vector<std::vector<cplx>> slice_hat_cache(grid.nt + 2 * reach + 1);
    std::vector<bool> slice_cached(grid.nt + 2 * reach + 1, false);
    auto slice_hat = [&](long j) -> const std::vector<cplx>& {
        std::size_t id = static_cast<std::size_t>(j + reach);
        if (!slice_cached[id]) {
            slice_hat_cache[id] = slice_at(j).spectrum();
            slice_cached[id] = true;
        }
        return slice_hat_cache[id];
    };

    for (std::size_t i = 0; i < grid.nt; ++i) {
        std::vector<cplx> acc(nx * ny, 0.0);
        for (long j = -reach; j <= reach; ++j) {
            if (!sp.nonzero[j + reach]) continue;
            long src = static_cast<long>(i) - j;
            const std::vector<cplx>& sh = slice_hat(src);
            const std::vector<cplx>& rh = sp.rho_hat[j + reach];
            for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += rh[k] * sh[k];
        }
        // Torus convolution multiplies coefficients; the time sum carries dt.
        for (auto& c : acc) c *= grid.dt();
        out.push_back(PeriodicField::from_spectrum(nx, ny, std::move(acc)));
    }
    return out;
}

MollifiedNoise mollify(const NoiseRealization& xi, const Mollifier& m) {
    MollifiedNoise out;
    out.grid = xi.grid();
    out.eps = m.eps;
    out.slices = mollify_slices(xi.grid(), [&](long j) { return xi.slice(j); }, m);
    return out;
}

double SeparableKernel::norm_sq(const NoiseGrid& grid) const {
    double dv = grid.cell_volume();
    double acc = 0.0;
    for (const auto& a : terms)
        for (const auto& b : terms) {
            double gg = 0.0, hh = 0.0;
            for (std::size_t i = 0; i < a.g.size(); ++i) gg += a.g[i] * b.g[i];
            for (std::size_t i = 0; i < a.h.size(); ++i) hh += a.h[i] * b.h[i];
            acc += a.weight * b.weight * (gg * dv) * (hh * dv);
        }
    return acc;
}

double chaos_i2_value(const NoiseRealization& xi, const SeparableKernel& f) {
    const NoiseGrid& grid = xi.grid();
    double dv = grid.cell_volume();
    std::size_t ncells = grid.nt * grid.nx * grid.ny;
    std::vector<double> cells(ncells);
    std::size_t idx = 0;
    for (std::size_t it = 0; it < grid.nt; ++it)
        for (std::size_t iy = 0; iy < grid.ny; ++iy)
            for (std::size_t ix = 0; ix < grid.nx; ++ix, ++idx) cells[idx] = xi.cell(it, ix, iy);

    double acc = 0.0;
    for (const auto& term : f.terms) {
        double pg = 0.0, ph = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < ncells; ++i) {
            pg += term.g[i] * cells[i];
            ph += term.h[i] * cells[i];
            diag += term.g[i] * term.h[i];
        }
        // <xi,g><xi,h> dV^2 minus the diagonal expectation sum_c f(c,c) dV.
        acc += term.weight * ((pg * dv) * (ph * dv) - diag * dv);
    }
    return acc;
}

ScalingFit noise_regularity_fit(std::uint64_t seed, const NoiseGrid& grid, double mu,
                                const std::vector<double>& lambdas, int n_samples, double eps,
                                MollifierProfile::Shape shape) {
    double s0 = 2.0 * mu;
    double t0 = grid.T / 2.0, x0 = 0.5, y0 = 0.5;

    // Sparse per-cell weights of each probe (optionally pre-mollified).
    struct Probe {
        std::vector<std::pair<std::size_t, double>> w;
    };
    std::vector<Probe> probes;
    std::vector<bool> needed(grid.nt * grid.nx * grid.ny, false);
    for (double lam : lambdas) {
        double ts = std::pow(lam, s0);
        double amp = std::pow(lam, -s0 - 2.0);
        auto probe_field = [&](double t, double x, double y) {
            double u = (t - t0) / ts;
            if (std::abs(u) >= 1.0) return 0.0;
            double dx = x - x0 - std::floor(x - x0 + 0.5);
            double dy = y - y0 - std::floor(y - y0 + 0.5);
            return amp * smooth_bump_arg(u * u) * probe_profile(dx / lam, dy / lam);
        };

        Probe p;
        if (eps <= 0.0) {
            std::size_t idx = 0;
            for (std::size_t it = 0; it < grid.nt; ++it) {
                double t = (it + 0.5) * grid.dt();
                for (std::size_t iy = 0; iy < grid.ny; ++iy) {
                    double y = (iy + 0.5) * grid.dy();
                    for (std::size_t ix = 0; ix < grid.nx; ++ix, ++idx) {
                        double x = (ix + 0.5) * grid.dx();
                        double v = probe_field(t, x, y);
                        if (v != 0.0) { p.w.emplace_back(idx, v); needed[idx] = true; }
                    }
                }
            }
        } else {
            Mollifier m{MollifierProfile(shape), eps, s0, false};
            auto slices = mollify_slices(grid, [&](long j) {
                PeriodicField f(grid.nx, grid.ny);
                double t = (j + 0.5) * grid.dt();
                for (std::size_t iy = 0; iy < grid.ny; ++iy)
                    for (std::size_t ix = 0; ix < grid.nx; ++ix)
                        f.at(ix, iy) = probe_field(t, (ix + 0.5) * grid.dx(), (iy + 0.5) * grid.dy());
                return f;
            }, m);
            std::size_t idx = 0;
            for (std::size_t it = 0; it < grid.nt; ++it)
                for (std::size_t iy = 0; iy < grid.ny; ++iy)
                    for (std::size_t ix = 0; ix < grid.nx; ++ix, ++idx) {
                        double v = slices[it](ix, iy);
                        if (std::abs(v) > 1e-14) { p.w.emplace_back(idx, v); needed[idx] = true; }
                    }
        }
        probes.push_back(std::move(p));
    }

    // Shared realizations across lambda: generate needed cells once per draw.
    std::vector<std::size_t> cell_ids;
    for (std::size_t i = 0; i < needed.size(); ++i)
        if (needed[i]) cell_ids.push_back(i);
    std::vector<double> cells(needed.size(), 0.0);
    std::vector<double> moment(lambdas.size(), 0.0);
    double dv = grid.cell_volume();
    for (int r = 0; r < n_samples; ++r) {
        NoiseRealization xi(seed, grid, static_cast<std::uint64_t>(r));
        for (std::size_t id : cell_ids) {
            std::size_t it = id / (grid.nx * grid.ny);
            std::size_t rem = id % (grid.nx * grid.ny);
            cells[id] = xi.cell(static_cast<long>(it), static_cast<long>(rem % grid.nx),
                                static_cast<long>(rem / grid.nx));
        }
        for (std::size_t l = 0; l < probes.size(); ++l) {
            double acc = 0.0;
            for (const auto& [id, w] : probes[l].w) acc += cells[id] * w;
            acc *= dv;
            moment[l] += acc * acc;
        }
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t l = 0; l < lambdas.size(); ++l)
        pts.emplace_back(std::log(lambdas[l]), std::log(moment[l] / n_samples));
    return ScalingFit::least_squares(std::move(pts));
}

ChaosEstimate chaos_i2_estimate(std::uint64_t seed, const NoiseGrid& grid,
                                const SeparableKernel& f, int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("chaos_i2_estimate: need n_samples >= 2");
    ChaosEstimate est;
    est.n = n_samples;
    est.f_norm_sq = f.norm_sq(grid);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int r = 0; r < n_samples; ++r) {
        double v = chaos_i2_value(NoiseRealization(seed, grid, static_cast<std::uint64_t>(r)), f);
        s1 += v;
        s2 += v * v;
        s4 += v * v * v * v;
    }
    double n = n_samples;
    est.mean = s1 / n;
    est.second_moment = s2 / n;
    est.stderr_mean = std::sqrt(std::max(0.0, s2 / n - est.mean * est.mean) / n);
    est.stderr_second =
        std::sqrt(std::max(0.0, s4 / n - est.second_moment * est.second_moment) / n);
    return est;
}

} // namespace sqg
