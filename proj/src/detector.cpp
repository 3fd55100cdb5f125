#include "qadce/detector.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qadce {

double activity_log_odds(const VectorXd& x_hat, Index device, const DeviceLayout& layout, const PriorHyper& hyper) {
    require(x_hat.size() == layout.size(), ErrorCode::DimensionMismatch, "activity_log_odds: bad length");
    require(device >= 0 && device < layout.devices, ErrorCode::InvalidArgument, "activity_log_odds: bad device");
    double log_terms = 0.0;
    double energy = 0.0;
    for (Index m = 0; m < layout.grid_size; ++m) {
        const double u = layout.sq_magnitude(x_hat, device, m);
        log_terms += std::log1p(u / hyper.b);
        energy += u;
    }
    return -(1.0 + hyper.a) * log_terms + energy / hyper.epsilon;
}

double activity_threshold(Index grid_size, const PriorHyper& hyper) {
    const double M = static_cast<double>(grid_size);
    const double pi = std::numbers::pi;
    return std::log1p(-hyper.active_ratio) - std::log(hyper.active_ratio) -
           M * (std::log(hyper.a) - std::log(pi * hyper.b)) - M * std::log(pi * hyper.epsilon);
}

DetectionResult detect(const VectorXd& x_hat, const DeviceLayout& layout, const PriorHyper& hyper) {
    DetectionResult out;
    out.s_hat.assign(static_cast<std::size_t>(layout.devices), 0);
    out.llr.resize(layout.devices);
    for (Index n = 0; n < layout.devices; ++n)
        out.llr(n) = activity_log_odds(x_hat, n, layout, hyper);

    if (hyper.active_ratio <= 0.0 || hyper.active_ratio >= 1.0) {
        const std::uint8_t all = hyper.active_ratio >= 1.0 ? 1 : 0;
        out.threshold = all ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        out.s_hat.assign(out.s_hat.size(), all);
        return out;
    }
    out.threshold = activity_threshold(layout.grid_size, hyper);
    for (Index n = 0; n < layout.devices; ++n)
        out.s_hat[static_cast<std::size_t>(n)] = out.llr(n) > out.threshold ? 1 : 0;
    return out;
}

MatrixXc reconstruct_channels(const VectorXd& x_hat, const ActivityVector& s_hat, const MatrixXc& grid) {
    const Index N = static_cast<Index>(s_hat.size());
    MatrixXc X = from_real(x_hat, grid.cols(), N);
    for (Index n = 0; n < N; ++n)
        if (!s_hat[static_cast<std::size_t>(n)])
            X.col(n).setZero();
    return grid * X;
}

double mse(const VectorXd& x_hat, const VectorXd& x_true) {
    require(x_hat.size() == x_true.size() && x_hat.size() > 0, ErrorCode::DimensionMismatch,
            "mse: vectors must have equal non-zero length");
    return (x_hat - x_true).squaredNorm() / static_cast<double>(x_hat.size());
}

DetectionRates detection_rates(const ActivityVector& s_hat, const ActivityVector& s_true) {
    require(s_hat.size() == s_true.size(), ErrorCode::DimensionMismatch, "detection_rates: length mismatch");
    std::size_t active = 0, inactive = 0, hits = 0, misses = 0, false_alarms = 0;
    for (std::size_t n = 0; n < s_true.size(); ++n) {
        if (s_true[n]) {
            ++active;
            (s_hat[n] ? hits : misses) += 1;
        } else {
            ++inactive;
            false_alarms += s_hat[n] ? 1 : 0;
        }
    }
    DetectionRates r;
    if (active > 0) {
        r.tpr = static_cast<double>(hits) / static_cast<double>(active);
        r.fnr = static_cast<double>(misses) / static_cast<double>(active);
    }
    if (inactive > 0)
        r.fpr = static_cast<double>(false_alarms) / static_cast<double>(inactive);
    return r;
}

} // namespace qadce
