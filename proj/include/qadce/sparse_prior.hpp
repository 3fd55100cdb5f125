#pragma once

#include "qadce/config.hpp"
#include "qadce/types.hpp"

namespace qadce {

/// Two-level prior on the aggregate X: per device, Bernoulli(q_s) activity;
/// an active device has i.i.d. Student-type entries
/// (a / (pi b)) (|X|^2 / b + 1)^-(a+1), an inactive one CN(0, epsilon).
struct PriorHyper {
    double active_ratio = 0.1; // q_s
    double a = 1e-6;
    double b = 1e-6;
    double epsilon = 1e-8;

    void validate() const;

    /// epsilon = cfg.epsilon_rel / (2 M).
    static PriorHyper from_config(const SystemConfig& cfg);
};

/// Layout of x = [Re vec X; Im vec X] for a grid_size x devices aggregate.
/// Device n owns indices n*M .. n*M+M-1 and MN + n*M .. MN + n*M+M-1.
struct DeviceLayout {
    Index grid_size = 0; // M
    Index devices = 0;   // N

    Index size() const { return 2 * grid_size * devices; }
    Index half() const { return grid_size * devices; }

    /// |X_(m,n)|^2 = x_i^2 + x_{i+MN}^2 for i = n*M + m.
    double sq_magnitude(const VectorXd& x, Index n, Index m) const {
        const Index i = n * grid_size + m;
        return x(i) * x(i) + x(i + half()) * x(i + half());
    }

    static DeviceLayout for_vector(const VectorXd& x, Index grid_size);
};

/// Per-device log-densities of the two branches, without the q_s factor.
struct BranchLogDensities {
    VectorXd inactive; // log P0(x[n])
    VectorXd active;   // log P1(x[n])
};

BranchLogDensities branch_log_densities(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper);

/// sum_n log[(1 - q_s) P0(x[n]) + q_s P1(x[n])], evaluated with log-sum-exp.
double log_prior(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper);

struct Responsibilities {
    VectorXd lam0;
    VectorXd lam1;
};

Responsibilities responsibilities(const VectorXd& x, const DeviceLayout& layout, const PriorHyper& hyper);

struct SurrogateWeights {
    VectorXd lam0_diag; // <lambda0>/epsilon on V(n)
    VectorXd lam1_diag; // (1 + a) <lambda1>/b on V(n)
    VectorXd w_diag;    // 1 / ((x_i^2 + x_{i +- MN}^2)/b + 1)
};

SurrogateWeights surrogate_weights(const VectorXd& x, const Responsibilities& resp, const DeviceLayout& layout,
                                   const PriorHyper& hyper);

/// Upper bound on -log p(x) built at x_j: the EM bound over the activity
/// branch plus a tangent bound on the log term of the active branch. Equals
/// -log p(x_j) at x = x_j.
double surrogate_neg_log_prior(const VectorXd& x, const VectorXd& x_j, const DeviceLayout& layout,
                               const PriorHyper& hyper);

} // namespace qadce
