#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqg/field.hpp"
#include "sqg/fits.hpp"

namespace sqg {

struct NormEstimate {
    double alpha = 0.0;
    double value = 0.0;
    std::vector<std::pair<double, double>> per_scale; // (lambda, sup over centers/probes)
    int excluded_scales = 0;
    std::string note;
};

struct BesovParams {
    std::vector<double> lambdas;   // filtered against the 4-cell resolution floor
    int centers = 64;
    std::uint64_t seed = 1;
};

/// Negative-regularity Hoelder estimate sup over sampled (x, lambda, probe) of
/// lambda^{-alpha} |<f, probe^lambda_x>| with a fixed finite probe family (a
/// smooth bump and its first derivatives, normalized to the C^2 ball). A
/// finite family bounds the true sup from below; callers treat the result as a
/// trend/stability figure.
NormEstimate besov_norm(const PeriodicField& f, double alpha, const BesovParams& params);

struct WeightedNormParams {
    double delta = 0.3;
    double alpha = 0.0;
    double eta = 0.0;      // <= 0
    double T = 1.0;
    double s0 = 2.0;       // parabolic time exponent
    BesovParams besov;
    std::size_t max_pairs = 600;
};

struct WeightedNormEstimate {
    double value = 0.0;
    double sup_term = 0.0;        // sup_t |t|_0^{-eta} ||f(t)||_{C^alpha}
    double increment_term = 0.0;  // sup_{s!=t} ||f(t)-f(s)||_{C^{alpha-delta}} / (|t,s|_0^eta |t-s|^{delta/s0})
};

/// Discrete weighted time-Hoelder norm of a trajectory sampled at the given
/// times in (0, T].
WeightedNormEstimate weighted_time_norm(const std::vector<double>& times,
                                        const std::vector<PeriodicField>& fields,
                                        const WeightedNormParams& params);

} // namespace sqg
