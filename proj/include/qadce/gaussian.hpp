#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace qadce::gaussian {

inline double pdf(double z) {
    if (std::isinf(z))
        return 0.0;
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// P(a < Z <= b) for standard normal Z, accurate in either tail.
inline double interval_prob(double a, double b) {
    if (a >= 0.0)
        return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
    if (b <= 0.0)
        return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
    return 1.0 - cdf(a) - 0.5 * std::erfc(b / std::numbers::sqrt2);
}

/// E[Z | a < Z <= b].
inline double conditional_mean(double a, double b) {
    const double p = interval_prob(a, b);
    if (p > 1e-300)
        return (pdf(a) - pdf(b)) / p;
    // Deep tail: the cell collapses onto its finite edge.
    if (std::isinf(b))
        return a + 1.0 / a;
    if (std::isinf(a))
        return b + 1.0 / b;
    return 0.5 * (a + b);
}

} // namespace qadce::gaussian
