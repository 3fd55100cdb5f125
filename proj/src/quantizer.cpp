#include "qadce/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "qadce/gaussian.hpp"

namespace qadce {

ScalarQuantizer ScalarQuantizer::from_table(std::vector<double> thresholds, std::vector<double> levels) {
    const std::size_t L = levels.size();
    require(L >= 2 && (L & (L - 1)) == 0, ErrorCode::InvalidArgument,
            "ScalarQuantizer: level count must be a power of two >= 2");
    require(thresholds.size() == L - 1, ErrorCode::InvalidArgument,
            "ScalarQuantizer: need exactly one threshold fewer than levels");
    for (std::size_t i = 1; i < L; ++i)
        require(levels[i - 1] < levels[i], ErrorCode::InvalidArgument,
                "ScalarQuantizer: levels must be strictly increasing");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        require(thresholds[i - 1] < thresholds[i], ErrorCode::InvalidArgument,
                "ScalarQuantizer: thresholds must be strictly increasing");
    for (double v : thresholds)
        require(std::isfinite(v), ErrorCode::InvalidArgument, "ScalarQuantizer: non-finite threshold");

    ScalarQuantizer q;
    q.bits_ = std::countr_zero(L);
    q.thresholds_ = std::move(thresholds);
    q.levels_ = std::move(levels);
    return q;
}

std::size_t ScalarQuantizer::cell(double v) const {
    return static_cast<std::size_t>(std::lower_bound(thresholds_.begin(), thresholds_.end(), v) -
                                    thresholds_.begin());
}

double ScalarQuantizer::operator()(double v) const {
    if (is_identity())
        return v;
    return levels_[cell(v)];
}

ScalarQuantizer ScalarQuantizer::scaled(double factor) const {
    require(factor > 0.0, ErrorCode::InvalidArgument, "ScalarQuantizer::scaled: factor must be > 0");
    ScalarQuantizer q = *this;
    for (auto& t : q.thresholds_)
        t *= factor;
    for (auto& l : q.levels_)
        l *= factor;
    return q;
}

ScalarQuantizer lloyd_max_design(int bits, double input_std, const LloydMaxOptions& opts) {
    require(bits >= 1 && bits <= 12, ErrorCode::InvalidArgument, "lloyd_max_design: bits must be in 1..12");
    require(input_std > 0.0, ErrorCode::InvalidArgument, "lloyd_max_design: input_std must be > 0");

    const std::size_t L = std::size_t{1} << bits;
    const double inf = std::numeric_limits<double>::infinity();

    // Companded start: levels at quantiles of N(0, 3), the point density of
    // the high-resolution optimum for a Gaussian source.
    std::vector<double> levels(L);
    for (std::size_t l = 0; l < L; ++l) {
        const double p = (static_cast<double>(l) + 0.5) / static_cast<double>(L);
        // Inverse CDF by bisection; only used for the starting point.
        double lo = -40.0, hi = 40.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (gaussian::cdf(mid) < p ? lo : hi) = mid;
        }
        levels[l] = std::sqrt(3.0) * 0.5 * (lo + hi);
    }

    std::vector<double> thresholds(L - 1);
    bool converged = false;
    for (int it = 0; it < opts.max_iters; ++it) {
        for (std::size_t l = 0; l + 1 < L; ++l)
            thresholds[l] = 0.5 * (levels[l] + levels[l + 1]);
        double change = 0.0;
        double scale = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double a = l == 0 ? -inf : thresholds[l - 1];
            const double b = l + 1 == L ? inf : thresholds[l];
            const double next = gaussian::conditional_mean(a, b);
            change = std::max(change, std::abs(next - levels[l]));
            scale = std::max(scale, std::abs(next));
            levels[l] = next;
        }
        if (change <= opts.tol_rel * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        fail(ErrorCode::NotConverged, "lloyd_max_design: no convergence for " + std::to_string(bits) +
                                          " bits within " + std::to_string(opts.max_iters) + " iterations");

    for (std::size_t l = 0; l + 1 < L; ++l)
        thresholds[l] = 0.5 * (levels[l] + levels[l + 1]);
    // Enforce exact symmetry about zero.
    for (std::size_t l = 0; l < L / 2; ++l) {
        const double m = 0.5 * (levels[L - 1 - l] - levels[l]);
        levels[l] = -m;
        levels[L - 1 - l] = m;
    }
    for (std::size_t l = 0; l < (L - 1) / 2; ++l) {
        const double m = 0.5 * (thresholds[L - 2 - l] - thresholds[l]);
        thresholds[l] = -m;
        thresholds[L - 2 - l] = m;
    }
    thresholds[(L - 1) / 2] = 0.0;

    return ScalarQuantizer::from_table(std::move(thresholds), std::move(levels)).scaled(input_std);
}

double quantize_scalar(const ScalarQuantizer& q, double v) { return q(v); }

MatrixXc quantize_complex(const ScalarQuantizer& q, const MatrixXc& y) {
    if (q.is_identity())
        return y;
    return y.unaryExpr([&q](const cdouble& v) { return cdouble(q(v.real()), q(v.imag())); });
}

VectorXd quantize_real(const ScalarQuantizer& q, const VectorXd& y) {
    if (q.is_identity())
        return y;
    return y.unaryExpr([&q](double v) { return q(v); });
}

void write_quantizer_json(std::ostream& out, const ScalarQuantizer& q) {
    nlohmann::json j;
    j["bits"] = q.bits() ? nlohmann::json(*q.bits()) : nlohmann::json(nullptr);
    j["thresholds"] = q.thresholds();
    j["levels"] = q.levels();
    out << j.dump();
}

} // namespace qadce
