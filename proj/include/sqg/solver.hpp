#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sqg/field.hpp"
#include "sqg/noise.hpp"
#include "sqg/norms.hpp"

namespace sqg {

struct SolverConfig {
    double mu = 0.9;
    double T = 0.5;
    std::size_t nt = 512;           // time steps
    std::size_t nx = 128;           // nx = ny
    double dealias_frac = 2.0 / 3.0;
    bool project_noise_mean = true; // Riesz velocity is undefined on the mean mode
    double blowup_cap = 1e6;        // sup-norm cap of the blow-up detector
    std::size_t snapshots = 17;     // trajectory records, evenly spaced incl. t=0

    enum class Init { Zero, Mode, Field };
    Init init = Init::Zero;
    int mode_kx = 1, mode_ky = 0;
    double mode_amp = 1.0;
    std::optional<PeriodicField> init_field;

    double dt() const { return T / static_cast<double>(nt); }
    double dx() const { return 1.0 / static_cast<double>(nx); }
    /// Recorded stiffness figure dt / dx^{2 mu}.
    double cfl_ratio() const { return dt() / std::pow(dx(), 2.0 * mu); }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PeriodicField> fields;
    bool blew_up = false;
    double blowup_time = -1.0;
    double cfl_ratio = 0.0;
    double max_imag_residue = 0.0;
    double max_divergence = 0.0;

    const PeriodicField& at_time(double t) const; // nearest recorded snapshot
};

/// div(theta R^perp theta) computed pseudo-spectrally with dealiasing; equals
/// the advective form R^perp theta . grad theta on resolved modes.
PeriodicField sqg_nonlinearity(const PeriodicField& theta, double dealias_frac = 2.0 / 3.0);
PeriodicField sqg_nonlinearity_advective(const PeriodicField& theta, double dealias_frac = 2.0 / 3.0);

/// Orthogonal Riesz velocity u = (-R2 theta, R1 theta).
std::pair<PeriodicField, PeriodicField> riesz_velocity(const PeriodicField& theta);

/// Exponential time stepping of the mollified equation: exact linear
/// propagator per mode, explicit nonlinearity and piecewise-constant noise
/// forcing. noise_slices, when given, must match (nt, nx) of the config.
Trajectory solve_sqg(const SolverConfig& cfg, const std::vector<PeriodicField>* noise_slices);

/// Spectral restriction to a coarser grid (modes below the coarse Nyquist).
PeriodicField restrict_field(const PeriodicField& f, std::size_t nx_coarse);

struct EpsConvergenceRow {
    double eps = 0.0;
    double diff_norm = 0.0; // ||theta_{k+1}(t*) - theta_k(t*)|| against the previous eps
};

struct EpsConvergenceReport {
    std::vector<double> eps_list;
    std::vector<EpsConvergenceRow> rows;   // successive differences
    double alpha = 0.0;                    // exponent of the spatial estimator
    double t_star = 0.0;
    double mollifier_diff = -1.0;          // two profiles at the smallest eps
    double delta_bar = 0.0;
    WeightedNormEstimate trajectory_norm;  // of the smallest-eps run
    bool any_blowup = false;
};

struct EpsConvergenceConfig {
    SolverConfig base;
    double kappa = 0.01;
    std::uint64_t seed = 1;
    bool compare_mollifiers = true;
    double eta_initial = -0.1; // weight exponent is eta_initial - 1 + mu - 2*kappa
};

/// Solves for every eps with the same underlying realization (coupled noises)
/// and reports the successive-difference norms at t* = T/4 in the discrete
/// C^{-2+2mu-2kappa} estimator.
EpsConvergenceReport eps_convergence(const EpsConvergenceConfig& cfg,
                                     const std::vector<double>& eps_list);

} // namespace sqg
