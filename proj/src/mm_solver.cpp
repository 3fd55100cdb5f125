#include "qadce/mm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace qadce {

void SolverOptions::validate() const {
    require(max_iters >= 1, ErrorCode::InvalidArgument, "SolverOptions: max_iters must be >= 1");
    require(tol_rel > 0.0, ErrorCode::InvalidArgument, "SolverOptions: tol_rel must be > 0");
}

double objective(const VectorXd& x, const EffectiveLinearModel& model, const VectorXd& r_obs,
                 const DeviceLayout& layout, const PriorHyper& hyper) {
    const VectorXd residual = r_obs - model.apply(x);
    const double quad = 0.5 * residual.cwiseAbs2().cwiseQuotient(model.sigma).sum();
    return quad - log_prior(x, layout, hyper);
}

double objective_from_coefficients(const VectorXd& x, const SolverCoefficients& coeffs, double data_energy,
                                   const DeviceLayout& layout, const PriorHyper& hyper) {
    const double quad = 0.5 * x.dot(coeffs.omega2.apply(x)) - x.dot(coeffs.f) + 0.5 * data_energy;
    return quad - log_prior(x, layout, hyper);
}

VectorXd mm_update(const VectorXd& x, const SolverCoefficients& coeffs, const SurrogateWeights& weights) {
    const VectorXd numer = coeffs.majorizer.cwiseProduct(x) - coeffs.omega2.apply(x) + coeffs.f;
    const VectorXd denom = coeffs.majorizer.array() + 2.0 * weights.lam0_diag.array() +
                           2.0 * weights.lam1_diag.array() * weights.w_diag.array();
    return numer.cwiseQuotient(denom);
}

VectorXd mm_step(SolverState& state, const SolverCoefficients& coeffs, const DeviceLayout& layout,
                 const PriorHyper& hyper) {
    const Responsibilities resp = responsibilities(state.x, layout, hyper);
    state.weights = surrogate_weights(state.x, resp, layout, hyper);
    return mm_update(state.x, coeffs, state.weights);
}

double surrogate_objective(const VectorXd& x, const VectorXd& x_j, const EffectiveLinearModel& model,
                           const SolverCoefficients& coeffs, const VectorXd& r_obs, const DeviceLayout& layout,
                           const PriorHyper& hyper) {
    // 1/2 x^T O x  <=  1/2 [x^T D x - 2 x^T (D - O) x_j + x_j^T (D - O) x_j]
    const VectorXd& D = coeffs.majorizer;
    const VectorXd gap_xj = D.cwiseProduct(x_j) - coeffs.omega2.apply(x_j); // (D - O) x_j
    const double quad_bound = 0.5 * (x.dot(D.cwiseProduct(x)) - 2.0 * x.dot(gap_xj) + x_j.dot(gap_xj));
    const double data_energy = r_obs.cwiseAbs2().cwiseQuotient(model.sigma).sum();
    const double likelihood = quad_bound - x.dot(coeffs.f) + 0.5 * data_energy;
    return likelihood + surrogate_neg_log_prior(x, x_j, layout, hyper);
}

SolverState solve(const EffectiveLinearModel& model, const SolverCoefficients& coeffs, const VectorXd& r_obs,
                  const DeviceLayout& layout, const PriorHyper& hyper, const SolverOptions& opts) {
    opts.validate();
    hyper.validate();
    require(coeffs.f.size() == layout.size(), ErrorCode::DimensionMismatch, "solve: layout and coefficients disagree");

    SolverState state;
    state.x = VectorXd::Zero(layout.size());
    double prev_obj = 0.0;
    if (opts.objective_check) {
        prev_obj = objective(state.x, model, r_obs, layout, hyper);
        state.obj_trace.push_back(prev_obj);
    }

    for (int j = 0; j < opts.max_iters; ++j) {
        VectorXd next = mm_step(state, coeffs, layout, hyper);
        require(next.allFinite(), ErrorCode::Numeric, "solve: non-finite iterate at iteration " + std::to_string(j + 1));
        const double change = (next - state.x).norm() / std::max(state.x.norm(), 1e-12);
        state.x = std::move(next);
        state.iter = j + 1;
        state.change_trace.push_back(change);

        if (opts.objective_check) {
            const double obj = objective(state.x, model, r_obs, layout, hyper);
            const double rise = (obj - prev_obj) / std::max(std::abs(prev_obj), 1e-300);
            if (rise > kAscentTolerance)
                state.ascents.push_back({state.iter, rise});
            state.obj_trace.push_back(obj);
            prev_obj = obj;
        }
        if (change <= opts.tol_rel) {
            state.converged = true;
            break;
        }
    }
    return state;
}

void write_trace_csv(std::ostream& out, const SolverState& state) {
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    const bool has_obj = !state.obj_trace.empty();
    out << "iter,objective,change\n";
    if (has_obj)
        out << "0," << num(state.obj_trace[0]) << ",\n";
    for (std::size_t j = 0; j < state.change_trace.size(); ++j) {
        out << j + 1 << ',';
        if (has_obj && j + 1 < state.obj_trace.size())
            out << num(state.obj_trace[j + 1]);
        out << ',' << num(state.change_trace[j]) << '\n';
    }
}

double majorize_quadratic_slack(const MatrixXd& omega, const MatrixXd& omega_tilde, const VectorXd& x,
                                const VectorXd& x0) {
    const MatrixXd gap = omega_tilde - omega;
    const double lhs = x.dot(omega * x);
    const double rhs = x.dot(omega_tilde * x) - 2.0 * x.dot(gap * x0) + x0.dot(gap * x0);
    return rhs - lhs;
}

bool majorize_quadratic_check(const MatrixXd& omega, const MatrixXd& omega_tilde, const VectorXd& x,
                              const VectorXd& x0, double tol) {
    return majorize_quadratic_slack(omega, omega_tilde, x, x0) >= -tol;
}

} // namespace qadce
