#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace sqg {

/// Record of a log-log regression shared by the order/bound verification
/// routines: abscissae/ordinates are already logarithms.
struct ScalingFit {
    std::vector<std::pair<double, double>> points;
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
    int excluded = 0;          // non-finite samples reported, never dropped silently
    bool log_mode = false;     // set when the target order is 0 (logarithmic bound)

    static ScalingFit least_squares(std::vector<std::pair<double, double>> pts, int excluded = 0) {
        ScalingFit f;
        f.points = std::move(pts);
        f.excluded = excluded;
        const std::size_t n = f.points.size();
        if (n < 2) return f;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : f.points) { sx += x; sy += y; sxx += x * x; sxy += x * y; }
        double den = n * sxx - sx * sx;
        f.slope = (n * sxy - sx * sy) / den;
        f.intercept = (sy - f.slope * sx) / n;
        for (const auto& [x, y] : f.points)
            f.max_residual = std::max(f.max_residual, std::abs(y - (f.intercept + f.slope * x)));
        return f;
    }
};

} // namespace sqg
