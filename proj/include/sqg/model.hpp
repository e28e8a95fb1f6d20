#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqg/field.hpp"
#include "sqg/fits.hpp"
#include "sqg/kernels.hpp"
#include "sqg/noise.hpp"
#include "sqg/structure.hpp"
#include "sqg/symbol.hpp"

namespace sqg {

struct ModelParams {
    double mu = 0.9;
    double kappa = 0.0;
    double eps = 0.0625;
    MollifierProfile::Shape shape = MollifierProfile::Shape::Exponential;
    bool literal_mollifier = false;
    NoiseGrid grid{64, 64, 64, 0.25}; // nt steps over [0,T], evaluation times m*dt
    std::uint64_t seed = 1;

    double s0() const { return 2.0 * mu; }
    double dt() const { return grid.dt(); }
    Mollifier mollifier() const {
        return Mollifier{MollifierProfile(shape), eps, s0(), literal_mollifier};
    }
};

/// Spatial probe phi^lambda_x. Besides the reference bump the family carries
/// its first derivative (vanishing mean) and a two-scale wavelet combination
/// phi - 20 phi(2.) + 64 phi(4.) whose mass and second moment both vanish:
/// the cancellations keep torus infrared content out of scaling measurements.
struct SpatialProbe {
    enum class Profile { Bump, DxBump, Wavelet };
    double cx = 0.5, cy = 0.5;
    double lambda = 0.25;
    Profile profile = Profile::Bump;
};
double probe_pair(const PeriodicField& f, const SpatialProbe& pr);
/// Mass of phi^lambda_x; independent of lambda and center (zero for DxBump).
double probe_mass(SpatialProbe::Profile profile = SpatialProbe::Profile::Bump);

/// Realization of the canonical model on the symbol basis: the primitive is
/// the stochastic convolution of the mollified noise, products act pointwise,
/// the integration symbols convolve and subtract their spatial jet at the base
/// point. Fields are evaluated on the grid of params at times m*dt.
class CanonicalModel {
public:
    CanonicalModel(const ModelParams& p, std::uint64_t realization);
    CanonicalModel(const ModelParams& p, MollifiedNoise forcing); // injected forcing

    const ModelParams& params() const { return p_; }
    double time_of(std::size_t it) const { return it * p_.dt(); }

    /// Pi^{eps,t}_x tau as a spatial field in y; base x = grid node (jx,jy).
    PeriodicField pi_field(const SymbolPtr& tau, std::size_t it, std::size_t jx, std::size_t jy);
    /// Pairing against the probe; the base point is the probe center snapped
    /// to the grid.
    double pi_pair(const SymbolPtr& tau, std::size_t it, const SpatialProbe& pr);

    /// Slice trajectory of a base-point-independent symbol (cached).
    const std::vector<PeriodicField>& trajectory(const SymbolPtr& tau);
    bool base_independent(const Symbol& tau) const;

private:
    PeriodicField subtract_jet(const PeriodicField& g, double order, std::size_t jx, std::size_t jy);

    ModelParams p_;
    MollifiedNoise noise_;
    std::map<std::string, std::vector<PeriodicField>> cache_;
};

struct RenormalizationConstant {
    int dir = 1;
    double eps = 0.0;
    double value = 0.0;             // (R_i K_eps, K_eps) over (0,T) x T^2
    double unsigned_integral = 0.0; // same with |integrand|, for the eps trend
    double max_slice_integral = 0.0; // antisymmetry probe, per time slice
    double t_slab = 0.0;
};

/// Discrete renormalization constant over the slab (0, grid.T): the kernel is
/// the one the model's integrator realizes, so the Wick decomposition holds
/// cell-exactly against it.
RenormalizationConstant renorm_constant(const ModelParams& p, int dir);

/// Sampled first-chaos kernel slices: the per-cell kernels the integrator
/// realizes for the primitive (riesz_dir = 0) and its Riesz images, indexed by
/// noise slice i in [i_lo, m_star - 1 - i_lo].
struct ChaosKernelSlices {
    long i_lo = 0;
    int riesz_dir = 0;
    std::vector<PeriodicField> slices;
};
ChaosKernelSlices chaos_kernel_slices(const ModelParams& p, std::size_t m_star, int riesz_dir);

struct RenormEpsReport {
    std::vector<RenormalizationConstant> constants;
    ScalingFit unsigned_fit;  // log |unsigned integral| vs log eps
    double claimed_exponent = 0.0; // -2 + 2 mu
    double max_abs_value = 0.0;    // largest signed constant seen
};
RenormEpsReport renorm_eps_report(const ModelParams& base, const std::vector<double>& eps_list);

/// The renormalized pairing: subtracts C * probe mass on the product symbol
/// R_i[I[Xi]] I[Xi] and passes every other symbol through unchanged.
double renormalize_pair(const SymbolPtr& tau, double raw_pair, double c_value);

// --- Monte Carlo scaling verification -------------------------------------------

struct McParams {
    std::vector<double> lambdas{0.5, 0.25, 0.125, 0.0625, 0.03125};
    int max_samples = 2000;
    double stderr_stop_frac = 0.06; // early stop when every row reaches this
    int check_every = 128;
    int threads = 2;
    double t_star_frac = 1.0;       // evaluation time as a fraction of grid.T
    double center_x = 0.5, center_y = 0.5;
};

struct McRow {
    double abscissa = 0.0; // lambda, or |t-s| for the time fits
    double mean_sq = 0.0;
    double se = 0.0;
    int n = 0;
};

struct ScalingMcResult {
    std::string symbol;
    std::vector<McRow> rows;
    ScalingFit fit;
    double slope_target = 0.0;      // 2 |tau| at (mu, 0)
    bool power_warning = false;     // stderr > 20% of a mean somewhere
    double renorm_constant_used = 0.0;
};

/// Second-moment slope of <Pi^t_x tau, phi^lambda_x> over the lambda list for
/// the primitive, its Riesz images and the renormalized product symbol.
/// Realizations are shared across lambdas and symbols.
std::vector<ScalingMcResult> scaling_mc(const ModelParams& p,
                                        const std::vector<SymbolPtr>& taus, const McParams& mc);

struct TimeRegResult {
    std::vector<McRow> rows; // abscissa |t-s|
    ScalingFit fit;
    double slope_target = 0.0; // 2 delta / s0
    bool power_warning = false;
};

/// Second moment of the pairing of Pi^t - Pi^s against phi^lambda at fixed
/// lambda, fitted against |t-s|.
TimeRegResult time_regularity_mc(const ModelParams& p, const SymbolPtr& tau, double lambda,
                                 double delta, const std::vector<double>& increments,
                                 const McParams& mc);

// --- covariance of the second-chaos kernel ---------------------------------------

struct CovarianceOrderResult {
    ScalingFit fit;
    double target = 0.0;      // -4 + 4 mu
    bool log_mode = false;    // mu = 1: the bound is logarithmic
    /// max over probed points of |H - corrRK*corrK| / |H| with independently
    /// recomputed factors.
    double factorization_residual = 0.0;
};
CovarianceOrderResult covariance_order(double mu, const std::vector<double>& radii);

// --- reconstruction ----------------------------------------------------------------

/// Coefficients of a modelled distribution over the truncated basis: constant
/// coefficients per symbol plus a coefficient field for the unit symbol.
struct SolutionExpansion {
    std::vector<std::pair<SymbolPtr, double>> terms;
    std::optional<PeriodicField> unit_coefficient;
};

/// The explicit continuous-model formula (R_t F_t)(x) = (Pi^t_x F_t(x))(x).
PeriodicField reconstruct_explicit(CanonicalModel& model, const SolutionExpansion& f,
                                   std::size_t it, const ModelSpace* basis = nullptr);

struct DefectFitResult {
    ScalingFit fit;
    double gamma_target = 0.0; // 1 + 2 kappa - mu
    std::vector<McRow> rows;   // per-lambda sup over centers
};

/// lambda-slope of the reconstruction defect of the truncated solution
/// expansion around the mollified-equation solution driven by the same noise.
DefectFitResult reconstruction_defect_fit(const ModelParams& p, const std::vector<double>& lambdas,
                                          int centers, std::uint64_t realization = 0);

// --- polynomial-sector identities --------------------------------------------------

struct PolyModelReport {
    double gamma_cocycle = 0.0;   // max |Gamma_xy Gamma_yz - Gamma_xz| on samples
    double sigma_cocycle = 0.0;
    double exchange = 0.0;        // Sigma Gamma vs Gamma Sigma
    double reexpansion = 0.0;     // Pi_x Gamma_xy vs Pi_y
    double max_error() const {
        return std::max(std::max(gamma_cocycle, sigma_cocycle), std::max(exchange, reexpansion));
    }
};
PolyModelReport polynomial_model_identities(std::uint64_t seed, int samples);

} // namespace sqg
