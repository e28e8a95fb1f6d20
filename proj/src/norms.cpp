#include "sqg/norms.hpp"

#include <cmath>
#include <stdexcept>

#include "sqg/rng.hpp"
#include "sqg/testfunc.hpp"

namespace sqg {

namespace {

// Normalization putting the probe family inside the C^2 unit ball.
double probe_c2_norm() {
    static double val = [] {
        double m = 0.0;
        const int n = 400;
        for (int i = -n; i <= n; ++i)
            for (int j = -n; j <= n; ++j) {
                double x = i / static_cast<double>(n), y = j / static_cast<double>(n);
                m = std::max(m, std::abs(probe_profile(x, y)));
                m = std::max(m, std::abs(probe_profile_d1(x, y)));
                m = std::max(m, std::abs(probe_profile_d2(x, y)));
                // Second differences stand in for the Hessian bound.
                double h = 1.0 / n;
                double dxx = (probe_profile(x + h, y) - 2 * probe_profile(x, y) +
                              probe_profile(x - h, y)) / (h * h);
                m = std::max(m, std::abs(dxx));
            }
        return m;
    }();
    return val;
}

// <f, probe^lambda_x> over the grid for the three family members at once.
void pair_probes(const PeriodicField& f, double cx, double cy, double lam, double out[3]) {
    std::size_t nx = f.nx(), ny = f.ny();
    double amp = 1.0 / (lam * lam * probe_c2_norm());
    out[0] = out[1] = out[2] = 0.0;
    long rx = static_cast<long>(std::ceil(lam * nx)) + 1;
    long ix0 = static_cast<long>(std::floor(cx * nx));
    long iy0 = static_cast<long>(std::floor(cy * ny));
    for (long dy = -rx; dy <= rx; ++dy) {
        std::size_t iy = static_cast<std::size_t>(((iy0 + dy) % static_cast<long>(ny) + ny) % ny);
        double y = wrapped_delta(iy, cy, ny) / lam;
        for (long dx = -rx; dx <= rx; ++dx) {
            std::size_t ix = static_cast<std::size_t>(((ix0 + dx) % static_cast<long>(nx) + nx) % nx);
            double x = wrapped_delta(ix, cx, nx) / lam;
            if (x * x + y * y >= 1.0) continue;
            double v = f(ix, iy);
            out[0] += v * probe_profile(x, y);
            out[1] += v * probe_profile_d1(x, y);
            out[2] += v * probe_profile_d2(x, y);
        }
    }
    double cell = 1.0 / static_cast<double>(nx * ny);
    for (int k = 0; k < 3; ++k) out[k] *= amp * cell;
}

} // namespace

NormEstimate besov_norm(const PeriodicField& f, double alpha, const BesovParams& params) {
    if (params.lambdas.empty()) throw std::invalid_argument("besov_norm: no scales given");
    NormEstimate est;
    est.alpha = alpha;
    double min_lam = 4.0 / static_cast<double>(f.nx());
    std::uint64_t key = rng::derive_key(params.seed, 0x6e6f726dULL);

    std::uint64_t ctr = 0;
    for (double lam : params.lambdas) {
        if (!(lam > 0.0 && lam <= 1.0)) throw std::invalid_argument("besov_norm: lambda in (0,1]");
        if (lam < min_lam) {
            ++est.excluded_scales;
            est.note = "scales below 4 grid cells excluded";
            ctr += 2 * static_cast<std::uint64_t>(params.centers);
            continue;
        }
        double sup = 0.0;
        for (int c = 0; c < params.centers; ++c) {
            double cx = rng::uniform(key, ctr++);
            double cy = rng::uniform(key, ctr++);
            double p[3];
            pair_probes(f, cx, cy, lam, p);
            for (double v : p) sup = std::max(sup, std::abs(v));
        }
        est.per_scale.emplace_back(lam, sup);
        est.value = std::max(est.value, std::pow(lam, -alpha) * sup);
    }
    return est;
}

WeightedNormEstimate weighted_time_norm(const std::vector<double>& times,
                                        const std::vector<PeriodicField>& fields,
                                        const WeightedNormParams& p) {
    if (times.size() != fields.size())
        throw std::invalid_argument("weighted_time_norm: times/fields mismatch");
    if (times.size() < 8)
        throw std::invalid_argument("weighted_time_norm: need at least 8 time samples");
    if (!(p.delta > 0.0)) throw std::invalid_argument("weighted_time_norm: delta must be positive");
    if (p.eta > 0.0) throw std::invalid_argument("weighted_time_norm: eta must be <= 0");

    auto t_weight = [&](double t) { return std::pow(std::min(std::pow(t, 1.0 / p.s0), 1.0), -p.eta); };

    WeightedNormEstimate out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        NormEstimate e = besov_norm(fields[i], p.alpha, p.besov);
        out.sup_term = std::max(out.sup_term, t_weight(times[i]) * e.value);
    }

    // Pair subsampling: all consecutive pairs plus strided long-range pairs.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) pairs.emplace_back(i, i + 1);
    for (std::size_t gap = 2; gap < times.size() && pairs.size() < p.max_pairs; gap *= 2)
        for (std::size_t i = 0; i + gap < times.size() && pairs.size() < p.max_pairs; i += gap)
            pairs.emplace_back(i, i + gap);

    for (const auto& [i, j] : pairs) {
        double ts = std::min(std::min(std::pow(times[i], 1.0 / p.s0), std::pow(times[j], 1.0 / p.s0)), 1.0);
        double denom = std::pow(ts, p.eta) * std::pow(std::abs(times[j] - times[i]), p.delta / p.s0);
        if (denom == 0.0) continue;
        NormEstimate e = besov_norm(fields[j] - fields[i], p.alpha - p.delta, p.besov);
        out.increment_term = std::max(out.increment_term, e.value / denom);
    }
    out.value = out.sup_term + out.increment_term;
    return out;
}

} // namespace sqg
