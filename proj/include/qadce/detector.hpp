#pragma once

#include <cstdint>
#include <optional>

#include "qadce/sparse_prior.hpp"
#include "qadce/system_model.hpp"
#include "qadce/types.hpp"

namespace qadce {

/// Per-device log-odds statistic
///   -(1+a) sum_m log(|X_mn|^2 / b + 1) + sum_m |X_mn|^2 / epsilon
/// compared against activity_threshold(); larger means more likely active.
double activity_log_odds(const VectorXd& x_hat, Index device, const DeviceLayout& layout, const PriorHyper& hyper);

/// log((1-q)/q) - M log(a/(pi b)) - M log(pi epsilon).
double activity_threshold(Index grid_size, const PriorHyper& hyper);

struct DetectionResult {
    ActivityVector s_hat;
    VectorXd llr;
    double threshold = 0.0;
};

DetectionResult detect(const VectorXd& x_hat, const DeviceLayout& layout, const PriorHyper& hyper);

/// H_hat = U_R * reshape(x_hat) with columns of undetected devices zeroed.
MatrixXc reconstruct_channels(const VectorXd& x_hat, const ActivityVector& s_hat, const MatrixXc& grid);

/// ||x_hat - x||^2 / length.
double mse(const VectorXd& x_hat, const VectorXd& x_true);

struct DetectionRates {
    std::optional<double> tpr; // absent without active devices
    std::optional<double> fnr;
    std::optional<double> fpr; // absent without inactive devices
};

DetectionRates detection_rates(const ActivityVector& s_hat, const ActivityVector& s_true);

struct MetricsRecord {
    double mse = 0.0;
    DetectionRates rates;
    Index pilot_length = 0;
    double snr_db = 0.0;
    std::optional<int> adc_bits;
    std::uint64_t seed = 0;
};

} // namespace qadce
