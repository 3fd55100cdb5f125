#include "qadce/sparse_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qadce {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// log(exp(u) + exp(v)) with -inf handled.
double log_add(double u, double v) {
    const double hi = std::max(u, v);
    if (hi == kNegInf)
        return kNegInf;
    return hi + std::log1p(std::exp(std::min(u, v) - hi));
}

/// 1 / (1 + exp(-t)) without overflow.
double logistic(double t) {
    if (t >= 0.0)
        return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

void PriorHyper::validate() const {
    require(a > 0.0 && b > 0.0 && epsilon > 0.0, ErrorCode::InvalidArgument, "PriorHyper: a, b, epsilon must be > 0");
    require(active_ratio >= 0.0 && active_ratio <= 1.0, ErrorCode::InvalidArgument,
            "PriorHyper: active ratio outside [0, 1]");
}

PriorHyper PriorHyper::from_config(const SystemConfig& cfg) {
    PriorHyper h;
    h.active_ratio = cfg.active_ratio;
    h.a = cfg.prior_a;
    h.b = cfg.prior_b;
    h.epsilon = cfg.epsilon_rel / (2.0 * static_cast<double>(cfg.grid_size));
    return h;
}

DeviceLayout DeviceLayout::for_vector(const VectorXd& x, Index grid_size) {
    require(grid_size >= 1 && x.size() % (2 * grid_size) == 0, ErrorCode::DimensionMismatch,
            "DeviceLayout: vector length is not a multiple of 2*grid_size");
    return {grid_size, x.size() / (2 * grid_size)};
}

BranchLogDensities branch_log_densities(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper) {
    require(x.size() == layout.size(), ErrorCode::DimensionMismatch, "branch_log_densities: bad length");
    const double M = static_cast<double>(layout.grid_size);
    const double pi = std::numbers::pi;
    const double inactive_const = -M * std::log(pi * hyper.epsilon);
    const double active_const = M * (std::log(hyper.a) - std::log(pi * hyper.b));

    BranchLogDensities out{VectorXd(layout.devices), VectorXd(layout.devices)};
    for (Index n = 0; n < layout.devices; ++n) {
        double energy = 0.0;
        double log_terms = 0.0;
        for (Index m = 0; m < layout.grid_size; ++m) {
            const double u = layout.sq_magnitude(x, n, m);
            energy += u;
            log_terms += std::log1p(u / hyper.b);
        }
        out.inactive(n) = inactive_const - energy / hyper.epsilon;
        out.active(n) = active_const - (1.0 + hyper.a) * log_terms;
    }
    return out;
}

double log_prior(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper) {
    const BranchLogDensities d = branch_log_densities(x, layout, hyper);
    const double log_q = log_or_neg_inf(hyper.active_ratio);
    const double log_1mq = log_or_neg_inf(1.0 - hyper.active_ratio);
    double total = 0.0;
    for (Index n = 0; n < layout.devices; ++n)
        total += log_add(log_1mq + d.inactive(n), log_q + d.active(n));
    return total;
}

Responsibilities responsibilities(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper) {
    const BranchLogDensities d = branch_log_densities(x, layout, hyper);
    Responsibilities r{VectorXd(layout.devices), VectorXd(layout.devices)};
    for (Index n = 0; n < layout.devices; ++n) {
        double lam1;
        if (hyper.active_ratio <= 0.0)
            lam1 = 0.0;
        else if (hyper.active_ratio >= 1.0)
            lam1 = 1.0;
        else {
            const double log_odds = std::log(hyper.active_ratio) - std::log1p(-hyper.active_ratio) +
                                    d.active(n) - d.inactive(n);
            lam1 = logistic(log_odds);
        }
        r.lam1(n) = lam1;
        r.lam0(n) = 1.0 - lam1;
    }
    return r;
}

SurrogateWeights surrogate_weights(const VectorXd& x, const Responsibilities& resp, const DeviceLayout& layout,
                                   const PriorHyper& hyper) {
    require(x.size() == layout.size() && resp.lam0.size() == layout.devices, ErrorCode::DimensionMismatch,
            "surrogate_weights: bad dimensions");
    const Index half = layout.half();
    SurrogateWeights w{VectorXd(layout.size()), VectorXd(layout.size()), VectorXd(layout.size())};
    for (Index n = 0; n < layout.devices; ++n) {
        const double l0 = resp.lam0(n) / hyper.epsilon;
        const double l1 = (1.0 + hyper.a) * resp.lam1(n) / hyper.b;
        for (Index m = 0; m < layout.grid_size; ++m) {
            const Index i = n * layout.grid_size + m;
            const double wi = 1.0 / (layout.sq_magnitude(x, n, m) / hyper.b + 1.0);
            w.lam0_diag(i) = w.lam0_diag(i + half) = l0;
            w.lam1_diag(i) = w.lam1_diag(i + half) = l1;
            w.w_diag(i) = w.w_diag(i + half) = wi;
        }
    }
    return w;
}

double surrogate_neg_log_prior(const VectorXd& x, const VectorXd& x_j, const DeviceLayout& layout,
                               const PriorHyper& hyper) {
    const Responsibilities resp = responsibilities(x_j, layout, hyper);
    const double M = static_cast<double>(layout.grid_size);
    const double pi = std::numbers::pi;
    const double log_q = log_or_neg_inf(hyper.active_ratio);
    const double log_1mq = log_or_neg_inf(1.0 - hyper.active_ratio);

    double total = 0.0;
    for (Index n = 0; n < layout.devices; ++n) {
        double energy = 0.0;
        double tangent = 0.0;
        for (Index m = 0; m < layout.grid_size; ++m) {
            const double u = layout.sq_magnitude(x, n, m);
            const double u0 = layout.sq_magnitude(x_j, n, m);
            energy += u;
            tangent += std::log1p(u0 / hyper.b) + (u - u0) / (hyper.b + u0);
        }
        const double neg_log_inactive = -log_1mq + M * std::log(pi * hyper.epsilon) + energy / hyper.epsilon;
        const double neg_log_active =
            -log_q - M * (std::log(hyper.a) - std::log(pi * hyper.b)) + (1.0 + hyper.a) * tangent;
        const double l0 = resp.lam0(n);
        const double l1 = resp.lam1(n);
        // Jensen: -log(sum_s p_s) <= sum_s lam_s (-log p_s + log lam_s), with 0 log 0 = 0.
        if (l0 > 0.0)
            total += l0 * (neg_log_inactive + std::log(l0));
        if (l1 > 0.0)
            total += l1 * (neg_log_active + std::log(l1));
    }
    return total;
}

} // namespace qadce
