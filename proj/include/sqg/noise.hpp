#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sqg/field.hpp"
#include "sqg/fits.hpp"
#include "sqg/rng.hpp"
#include "sqg/testfunc.hpp"

namespace sqg {

struct NoiseGrid {
    std::size_t nt = 16, nx = 64, ny = 64;
    double T = 1.0;
    double dt() const { return T / static_cast<double>(nt); }
    double dx() const { return 1.0 / static_cast<double>(nx); }
    double dy() const { return 1.0 / static_cast<double>(ny); }
    double cell_volume() const { return dt() * dx() * dy(); }
};

/// Discrete space-time white noise: i.i.d. centered Gaussian cells of variance
/// (dt dx dy)^{-1}. Cell (it,ix,iy) is a pure function of (seed, realization,
/// it, ix, iy); time indices outside [0,nt) are valid (the realization extends
/// past the window so mollification near the edges stays well defined).
class NoiseRealization {
public:
    NoiseRealization(std::uint64_t seed, NoiseGrid grid, std::uint64_t realization = 0)
        : seed_(seed), realization_(realization), grid_(grid),
          key_(rng::derive_key(seed, realization)),
          sigma_(1.0 / std::sqrt(grid.cell_volume())) {}

    const NoiseGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t realization() const { return realization_; }

    double cell(long it, long ix, long iy) const {
        long mx = ((ix % static_cast<long>(grid_.nx)) + grid_.nx) % grid_.nx;
        long my = ((iy % static_cast<long>(grid_.ny)) + grid_.ny) % grid_.ny;
        std::uint64_t c = (static_cast<std::uint64_t>(it + (1L << 30)) << 42) |
                          (static_cast<std::uint64_t>(my) << 21) | static_cast<std::uint64_t>(mx);
        return sigma_ * rng::normal(key_, c);
    }

    PeriodicField slice(long it) const {
        PeriodicField f(grid_.nx, grid_.ny);
        fill_slice(it, f.mutable_values().data());
        return f;
    }

    /// Writes one slice row-major; pairs of x-adjacent cells share one
    /// Box-Muller draw, which halves the transcendental cost.
    void fill_slice(long it, double* out) const {
        for (std::size_t iy = 0; iy < grid_.ny; ++iy) {
            std::uint64_t base = (static_cast<std::uint64_t>(it + (1L << 30)) << 42) |
                                 (static_cast<std::uint64_t>(iy) << 21);
            double* row = out + iy * grid_.nx;
            for (std::size_t ix = 0; ix < grid_.nx; ix += 2) {
                auto [z1, z2] = rng::normal_pair(key_, (base + ix) >> 1);
                row[ix] = sigma_ * z1;
                if (ix + 1 < grid_.nx) row[ix + 1] = sigma_ * z2;
            }
        }
    }

    /// <xi, phi> = sum of cells * phi(cell center) * cell volume over [0,T].
    double pair(const std::function<double(double, double, double)>& phi) const;
    /// Same pairing with precomputed per-cell weights (it-major over [0,nt)).
    double pair_weights(const std::vector<double>& w) const;

    NoiseRealization with_realization(std::uint64_t r) const {
        return NoiseRealization(seed_, grid_, r);
    }

private:
    std::uint64_t seed_;
    std::uint64_t realization_;
    NoiseGrid grid_;
    std::uint64_t key_;
    double sigma_;
};

/// xi mollified at scale eps: one spatial field per time index of the grid.
struct MollifiedNoise {
    NoiseGrid grid;
    double eps = 0.0;
    std::vector<PeriodicField> slices; // index 0..nt-1, times (i+1/2)*dt
};

/// Discrete space-time convolution of the cell noise with the mollifier.
/// Requires eps >= 2*max(dt^{1/s0}, dx) so the mollifier is grid-resolved.
MollifiedNoise mollify(const NoiseRealization& xi, const Mollifier& m);

/// The same convolution applied to caller-provided slices (the operation is
/// linear in them); slice index j carries time (j+1/2)*dt and out-of-range
/// indices read as zero.
std::vector<PeriodicField> mollify_slices(const NoiseGrid& grid,
                                          const std::function<PeriodicField(long)>& slice_at,
                                          const Mollifier& m);

/// Spatial spectra of the sampled mollifier per time offset, normalized to
/// exact unit discrete mass; shared by the convolution and the streaming
/// evaluators so both realize the same discrete kernel. The profile
/// factorizes, so rho_hat[off] = time_weight[off] * spatial_hat.
struct MollifierSpectra {
    long reach = 0;
    std::vector<std::vector<cplx>> rho_hat; // offset -reach..reach
    std::vector<bool> nonzero;
    std::vector<double> time_weight;
    std::vector<cplx> spatial_hat;
};
MollifierSpectra mollifier_spectra(const NoiseGrid& grid, const Mollifier& m);

/// Two-argument space-time functions in separated form sum_j w_j g_j (x) h_j:
/// the form every estimator in this project needs, and the one that keeps the
/// double cell sum tractable.
struct SeparableKernel {
    struct Term {
        double weight = 1.0;
        std::vector<double> g; // per-cell samples, it-major over [0,nt)
        std::vector<double> h;
    };
    std::vector<Term> terms;

    /// L^2 norm^2 on the grid: sum over both arguments with cell volume weights.
    double norm_sq(const NoiseGrid& grid) const;
};

struct ChaosEstimate {
    double mean = 0.0;
    double second_moment = 0.0;
    double stderr_mean = 0.0;
    double stderr_second = 0.0;
    int n = 0;
    double f_norm_sq = 0.0;
};

/// Monte Carlo over realizations of the second Wiener integral
///   I2(f) = sum_{c1,c2} f(c1,c2) xi(c1) xi(c2) dV^2 - sum_c f(c,c) dV,
/// the double cell sum against the product minus its diagonal expectation.
ChaosEstimate chaos_i2_estimate(std::uint64_t seed, const NoiseGrid& grid,
                                const SeparableKernel& f, int n_samples);

/// Evaluates I2(f) for one realization (used by the decomposition checks).
double chaos_i2_value(const NoiseRealization& xi, const SeparableKernel& f);

/// Monte Carlo fit of log E|<xi, probe^lambda>|^2 against log lambda with
/// scaled space-time probes centered in the window. With eps > 0 the probes
/// are pre-mollified through the adjoint identity <rho_eps * xi, phi> =
/// <xi, rho_eps * phi> (the profile is even). s0 = 2*mu fixes the scaling.
ScalingFit noise_regularity_fit(std::uint64_t seed, const NoiseGrid& grid, double mu,
                                const std::vector<double>& lambdas, int n_samples,
                                double eps = 0.0,
                                MollifierProfile::Shape shape = MollifierProfile::Shape::Exponential);

} // namespace sqg
