#pragma once

#include <iosfwd>
#include <vector>

#include "qadce/bussgang.hpp"
#include "qadce/sparse_prior.hpp"
#include "qadce/types.hpp"

namespace qadce {

struct SolverOptions {
    int max_iters = 500;
    double tol_rel = 1e-6;
    bool objective_check = false;

    void validate() const;
};

/// An iteration where the objective rose by more than kAscentTolerance
/// (relative). Indicates that J under-estimates lambda_max(Omega2).
struct AscentEvent {
    int iteration = 0;
    double increase = 0.0; // relative
};

inline constexpr double kAscentTolerance = 1e-6;

struct SolverState {
    VectorXd x;
    int iter = 0;
    std::vector<double> obj_trace;    // objective at x^(0), x^(1), ... when checked
    std::vector<double> change_trace; // relative iterate change per iteration
    bool converged = false;
    SurrogateWeights weights;
    std::vector<AscentEvent> ascents;
};

/// 1/2 (r - A x)^T Sigma^-1 (r - A x) - log p(x); the log det(Sigma) constant
/// is omitted.
double objective(const VectorXd& x, const EffectiveLinearModel& model, const VectorXd& r_obs,
                 const DeviceLayout& layout, const PriorHyper& hyper);

/// Same objective through the curvature form 1/2 x^T Omega2 x - x^T f + 1/2 r^T Sigma^-1 r.
double objective_from_coefficients(const VectorXd& x, const SolverCoefficients& coeffs, double data_energy,
                                   const DeviceLayout& layout, const PriorHyper& hyper);

/// x_i <- ((D - Omega2) x + f)_i / (D_ii + 2 Lam0_ii + 2 Lam1_ii W_ii), weights
/// refreshed from x first. The refreshed weights are written to state.weights.
VectorXd mm_step(SolverState& state, const SolverCoefficients& coeffs, const DeviceLayout& layout,
                 const PriorHyper& hyper);

/// Same update with caller-supplied weights.
VectorXd mm_update(const VectorXd& x, const SolverCoefficients& coeffs, const SurrogateWeights& weights);

/// Full majorizer f^(x | x_j): Lemma-1 bound on the quadratic plus the prior
/// surrogate. Equals the objective at x = x_j.
double surrogate_objective(const VectorXd& x, const VectorXd& x_j, const EffectiveLinearModel& model,
                           const SolverCoefficients& coeffs, const VectorXd& r_obs, const DeviceLayout& layout,
                           const PriorHyper& hyper);

/// Runs the MM iteration from x = 0.
SolverState solve(const EffectiveLinearModel& model, const SolverCoefficients& coeffs, const VectorXd& r_obs,
                  const DeviceLayout& layout, const PriorHyper& hyper, const SolverOptions& opts = {});

/// CSV "iter,objective,change": one row per iteration (objective empty
/// unless it was tracked; iteration 0 carries the starting objective).
void write_trace_csv(std::ostream& out, const SolverState& state);

/// Checks x^T O x <= x^T Ot x - 2 x^T (Ot - O) x0 + x0^T (Ot - O) x0 and
/// returns the slack (right minus left); the bound holds when slack >= -tol.
double majorize_quadratic_slack(const MatrixXd& omega, const MatrixXd& omega_tilde, const VectorXd& x,
                                const VectorXd& x0);
bool majorize_quadratic_check(const MatrixXd& omega, const MatrixXd& omega_tilde, const VectorXd& x,
                              const VectorXd& x0, double tol = 1e-10);

} // namespace qadce
