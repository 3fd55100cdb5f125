#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "qadce/types.hpp"

namespace qadce {

/// B-bit scalar quantizer: thresholds a_1 < ... < a_{2^B-1} and levels
/// b_1 < ... < b_{2^B}. Input in (a_{l-1}, a_l] maps to b_l, with a_0 = -inf
/// and a_{2^B} = +inf. An identity quantizer (no bits) models an
/// infinite-resolution ADC.
class ScalarQuantizer {
public:
    static ScalarQuantizer identity() { return ScalarQuantizer(); }

    /// Validates sizes (2^B - 1 thresholds, 2^B levels) and strict ordering.
    static ScalarQuantizer from_table(std::vector<double> thresholds, std::vector<double> levels);

    bool is_identity() const noexcept { return !bits_.has_value(); }
    std::optional<int> bits() const noexcept { return bits_; }
    const std::vector<double>& thresholds() const noexcept { return thresholds_; }
    const std::vector<double>& levels() const noexcept { return levels_; }

    /// Cell index l (0-based) with v in (a_{l-1}, a_l].
    std::size_t cell(double v) const;

    double operator()(double v) const;

    /// Same quantizer with thresholds and levels multiplied by `factor` > 0.
    ScalarQuantizer scaled(double factor) const;

private:
    ScalarQuantizer() = default;

    std::optional<int> bits_;
    std::vector<double> thresholds_;
    std::vector<double> levels_;
};

struct LloydMaxOptions {
    double tol_rel = 1e-10;
    int max_iters = 10000;
};

/// Minimum-MSE quantizer for N(0, input_std^2) by Lloyd's centroid/midpoint
/// iteration. Throws Error(NotConverged) when the level change does not drop
/// below tol_rel within max_iters.
ScalarQuantizer lloyd_max_design(int bits, double input_std, const LloydMaxOptions& opts = {});

double quantize_scalar(const ScalarQuantizer& q, double v);

/// Q(Re y) + j Q(Im y) entrywise.
MatrixXc quantize_complex(const ScalarQuantizer& q, const MatrixXc& y);

/// Applies q to every entry of a real vector.
VectorXd quantize_real(const ScalarQuantizer& q, const VectorXd& y);

/// {"bits":..,"thresholds":[..],"levels":[..]}
void write_quantizer_json(std::ostream& out, const ScalarQuantizer& q);

} // namespace qadce
