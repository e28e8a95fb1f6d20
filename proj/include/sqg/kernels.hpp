#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqg/field.hpp"
#include "sqg/fits.hpp"
#include "sqg/homogeneity.hpp"
#include "sqg/testfunc.hpp"

namespace sqg {

/// Anisotropic scaling (2*mu, 1, 1) on time-space with the norm
/// max(|t|^{1/(2*mu)}, |x|_inf).
struct ParabolicScaling {
    double mu = 1.0;
    double s0() const { return 2.0 * mu; }
    double total() const { return 2.0 * mu + 2.0; } // |s| = s0 + d
    double norm(double t, double x1, double x2) const {
        return std::max(std::pow(std::abs(t), 1.0 / s0()), std::max(std::abs(x1), std::abs(x2)));
    }
};

enum class KernelKind { FractionalHeat, HeatDeriv, RieszComponent, RieszHeat, Mollified };

struct KernelSpec {
    KernelKind kind = KernelKind::FractionalHeat;
    double mu = 1.0;
    int dir = 1;                       // derivative / Riesz component index
    double eps = 0.0;                  // Mollified only
    MollifierProfile::Shape mollifier = MollifierProfile::Shape::Exponential;
    std::unique_ptr<KernelSpec> base;  // Mollified only

    double order() const;              // declared order zeta = -|s| + beta
    double smoothing() const;          // beta
    bool reflected = false;            // evaluate z -> K(-z) (used for correlations)

    static KernelSpec fractional_heat(double mu) { return {KernelKind::FractionalHeat, mu, 1, 0.0, MollifierProfile::Shape::Exponential, nullptr, false}; }
    static KernelSpec heat_deriv(int j, double mu) { return {KernelKind::HeatDeriv, mu, j, 0.0, MollifierProfile::Shape::Exponential, nullptr, false}; }
    static KernelSpec riesz_heat(int i, double mu) { return {KernelKind::RieszHeat, mu, i, 0.0, MollifierProfile::Shape::Exponential, nullptr, false}; }
    static KernelSpec riesz_component(int i) { return {KernelKind::RieszComponent, 1.0, i, 0.0, MollifierProfile::Shape::Exponential, nullptr, false}; }

    KernelSpec clone() const;
};

/// Full-plane fractional heat kernel and companions, realized through radial
/// profile tables built by oscillatory (Hankel) quadrature. Evaluation uses
/// the self-similar form K(t,x) = t^{-1/mu} Phi(t^{-1/(2mu)}|x|).
class FullSpaceKernel {
public:
    explicit FullSpaceKernel(double mu);

    double mu() const { return mu_; }
    /// K(t,x); zero for t <= 0.
    double heat(double t, double x1, double x2) const;
    /// Spatial derivative d_j K.
    double heat_deriv(int j, double t, double x1, double x2) const;
    /// Riesz component R_i K.
    double riesz_heat(int i, double t, double x1, double x2) const;
    /// Dispatch on a spec (FractionalHeat / HeatDeriv / RieszHeat, reflected or not).
    double eval(const KernelSpec& spec, double t, double x1, double x2) const;

    /// Direct quadrature at (t,|x|) that does not use the self-similar form;
    /// the scaling identity is verified against it.
    static double heat_direct(double mu, double t, double rho);

private:
    struct Table {
        std::vector<double> uniform;    // rho in [0,4), step 1/512
        std::vector<double> geometric;  // rho in [4, 400], log-spaced
        double tail_amp = 0.0;          // amplitude of the rho^{-tail_exp} tail
        double tail_exp = 0.0;
        double interp(double rho) const;
    };
    static Table build_table(double mu, int bessel_order, int u_power, double tail_exp);

    double mu_;
    Table phi_k_;   // J0 weight u      : heat profile
    Table phi_r_;   // J1 weight u      : Riesz profile, odd prefactor -x_i/rho
    Table phi_kd_;  // J1 weight u^2    : radial derivative, prefactor -x_j/rho
};

/// Shared evaluation context: one full-space table set per mu plus the
/// mollified variants; cheap to copy around by shared_ptr.
class KernelContext {
public:
    explicit KernelContext(double mu) : scaling_{mu}, full_(std::make_shared<FullSpaceKernel>(mu)) {}

    const ParabolicScaling& scaling() const { return scaling_; }
    const FullSpaceKernel& full() const { return *full_; }

    /// Pointwise evaluation of any spec, including Mollified(base, eps, rho)
    /// by singularity-adapted quadrature against the mollifier.
    double eval(const KernelSpec& spec, double t, double x1, double x2) const;

private:
    ParabolicScaling scaling_;
    std::shared_ptr<FullSpaceKernel> full_;
};

// --- periodic spectral view -------------------------------------------------

/// Fractional heat multiplier a_k = (2*pi*|k|)^{2*mu}.
double heat_multiplier(double mu, int kx, int ky);

/// Periodic kernel as a symmetric mode sum over |k|_inf <= mode_cut.
double heat_kernel_eval(double mu, double t, double x1, double x2, int mode_cut);

/// K(t,.) sampled on the nx^2 grid through its spectrum e^{-t a_k}.
PeriodicField periodic_heat_field(double mu, double t, std::size_t nx);

/// Riesz transform as the Fourier multiplier i k_i/|k| (zero mode and the
/// Nyquist row of the differentiated axis mapped to zero).
PeriodicField riesz_apply(int i, const PeriodicField& f);

// --- dyadic decomposition ----------------------------------------------------

struct DyadicPiece {
    int level = 0;
    double r_max = 0.0;     // parabolic support radius (<= 2^{-level})
    double t_max = 0.0;
    double grid_r = 0.0;    // sampled box, slightly padded beyond the support
    double grid_t = 0.0;
    int nt = 0, nxy = 0;    // local grid: t in (0, grid_t], x in [-grid_r, grid_r)^2
    std::vector<double> samples; // index it*nxy*nxy + iy*nxy + ix
    std::map<std::string, double> residual_moments; // after correction, by monomial
    /// Central finite differences of the stored samples for |k| <= 1 per axis.
    std::vector<double> derivative(int k0, int k1, int k2) const;

    double sample(int it, int ix, int iy) const { return samples[(static_cast<std::size_t>(it) * nxy + iy) * nxy + ix]; }
    double dt() const { return grid_t / nt; }
    double dx() const { return 2.0 * grid_r / nxy; }
    double sup_abs() const;
};

struct DyadicDecomposition {
    std::vector<DyadicPiece> pieces;
    int moment_degree = 2;
    /// Reassembly residual max |sum_n K_n(z) - K(z)| / |K(z)| over probe points
    /// with parabolic radius in [2^{-n_max+1}, 1/2].
    double reassembly_rel_error = 0.0;
    double max_residual_moment = 0.0;
};

/// Splits K into annular pieces K_n subordinate to parabolic dyadic shells,
/// with polynomial moments up to moment_degree removed by a telescoping bump
/// correction. resolution is the global samples-per-unit-length budget; a
/// piece whose support would span fewer than 4 spatial cells is an error.
DyadicDecomposition dyadic_decompose(const KernelContext& ctx, const KernelSpec& spec, int n_max,
                                     int resolution, int moment_degree = 2);

// --- order fits ---------------------------------------------------------------

/// Fits log sup_{||z||_s = r} |D^k K(z)| against log r; slope estimates
/// zeta - |k|_s. Supported derivatives: k = 0 and single spatial derivatives.
ScalingFit kernel_order_fit(const KernelContext& ctx, const KernelSpec& spec, const MultiIndex& k,
                            const std::vector<double>& radii);

/// Space-time convolution (or correlation, via spec.reflected) of two
/// compactly truncated kernels evaluated by singularity-adapted quadrature;
/// fits the radial decay of the result. The pointwise flag multiplies the two
/// kernels instead of convolving them.
ScalingFit convolution_order_fit(const KernelContext& ctx, const KernelSpec& a, const KernelSpec& b,
                                 const std::vector<double>& radii, bool pointwise = false);

/// Space-time convolution value of truncated kernels at a single point.
double convolve_at(const KernelContext& ctx, const KernelSpec& a, const KernelSpec& b,
                   double t, double x1, double x2);

/// Radial fit of the pointwise product (a1*a2)(z) (b1*b2)(z) of two space-time
/// convolutions; its order is the sum of the two convolution orders.
ScalingFit convolution_product_order_fit(const KernelContext& ctx, const KernelSpec& a1,
                                         const KernelSpec& a2, const KernelSpec& b1,
                                         const KernelSpec& b2, const std::vector<double>& radii);

// --- mollified kernel bounds ---------------------------------------------------

struct MollifiedCheckReport {
    std::vector<double> eps_list;
    std::vector<double> bound_ratio_sup;  // sup_z |K_eps(z)| (||z||_s + eps)^{-zeta}
    std::vector<double> diff_ratio_sup;   // sup_z |K(z)-K_eps(z)| eps^{-nu} ||z||_s^{nu-zeta}
    double bound_spread = 0.0;            // max/min over eps of bound_ratio_sup
    double diff_spread = 0.0;
    bool flagged = false;                 // ratio growth beyond the configured factor
    std::string note;
};

MollifiedCheckReport mollified_kernel_check(const KernelContext& ctx, const KernelSpec& spec,
                                            MollifierProfile::Shape shape,
                                            const std::vector<double>& eps_list, double nu,
                                            double flag_factor = 8.0);

} // namespace sqg
