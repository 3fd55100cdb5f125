#pragma once

#include "qadce/config.hpp"
#include "qadce/quantizer.hpp"
#include "qadce/system_model.hpp"
#include "qadce/types.hpp"

namespace qadce {

/// sigma_{y,i} = sqrt(prior_var * sum_k Phi_ik^2 + sigma_v2 / 2).
VectorXd output_std(const VectorXd& row_sq_norms, double prior_var, double sigma_v2);
VectorXd output_std(const MatrixXd& phi, double prior_var, double sigma_v2);

/// Root-mean-square of the per-component output std; the input std for the
/// shared quantizer design.
double design_input_std(const VectorXd& sigma_y);

/// Bussgang gain E[Q(y) y] / sigma^2 for y ~ N(0, sigma^2).
double bussgang_gain(const ScalarQuantizer& q, double sigma);

/// E[Q(y)^2] - k^2 sigma^2 for y ~ N(0, sigma^2); clamped at zero.
double residual_variance(const ScalarQuantizer& q, double sigma);

/// r ~ A x + z with A = diag(gain) Phi and z of diagonal covariance Sigma.
struct EffectiveLinearModel {
    MeasurementOperator phi;
    VectorXd gain;     // K diagonal
    VectorXd sigma;    // Sigma diagonal
    VectorXd residual; // R_nq diagonal
    VectorXd output_std;
    double noise_variance = 0.0;

    Index rows() const { return phi.rows(); }
    Index cols() const { return phi.cols(); }

    VectorXd apply(const VectorXd& x) const;           // A x
    VectorXd apply_transpose(const VectorXd& v) const; // A^T v
    MatrixXd dense_A() const;
};

EffectiveLinearModel build_effective_model(MeasurementOperator phi, const ScalarQuantizer& q,
                                           double sigma_v2, double prior_var);

/// The symmetric PSD curvature A^T Sigma^-1 A, held in one of three forms.
class CurvatureOperator {
public:
    static CurvatureOperator dense(MatrixXd omega);
    static CurvatureOperator diagonal(VectorXd diag);
    /// weight * realembed(gram kron I_grid), gram Hermitian devices x devices.
    static CurvatureOperator kronecker(double weight, MatrixXc gram, Index grid_size);

    CurvatureMode mode() const noexcept { return mode_; }
    Index size() const noexcept { return size_; }

    VectorXd apply(const VectorXd& x) const;
    VectorXd diagonal() const;
    /// Largest absolute row sum of diag(s) Omega diag(s); always >= lambda_max
    /// of the scaled matrix. An empty s means no scaling. For the Kronecker
    /// form s must be constant over each device's indices.
    double gershgorin_bound(const VectorXd& s = {}) const;
    MatrixXd to_dense() const;

private:
    CurvatureMode mode_ = CurvatureMode::Dense;
    Index size_ = 0;
    MatrixXd dense_;
    VectorXd diag_;
    double weight_ = 0.0;
    MatrixXc gram_;
    Index grid_size_ = 0;
};

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of diag(s) Omega diag(s) (of Omega when s is empty),
/// stopping on relative Rayleigh-quotient change <= tol_rel.
PowerIterationResult power_iteration(const CurvatureOperator& op, const VectorXd& s = {}, double tol_rel = 1e-8,
                                     int max_iters = 1000);

struct SolverCoefficients {
    VectorXd data_weights; // k_i / Sigma_ii, so Omega1 = Phi^T diag(data_weights)
    CurvatureOperator omega2;
    VectorXd f;            // Omega1 r
    MajorizerKind kind = MajorizerKind::Scalar;
    double J = 0.0;        // inflated lambda_max of Omega2 (scalar) or of S Omega2 S (Jacobi)
    VectorXd majorizer;    // diagonal of the majorizer; J everywhere for Scalar
    bool J_from_power_iteration = true;
};

inline constexpr double kMajorizerInflation = 1e-6;

/// Omega1 r = A^T Sigma^-1 r.
VectorXd apply_omega1(const EffectiveLinearModel& model, const VectorXd& r);

SolverCoefficients precompute(const EffectiveLinearModel& model, const VectorXd& r_obs,
                              CurvatureMode mode = CurvatureMode::Auto, MajorizerKind kind = MajorizerKind::Scalar);

/// Builds coefficients directly from a curvature and linear term; used where
/// Omega2 and f are given rather than derived from a model.
SolverCoefficients make_coefficients(CurvatureOperator omega2, VectorXd f, MajorizerKind kind = MajorizerKind::Scalar);

void write_model_csv(std::ostream& out, const EffectiveLinearModel& model);

} // namespace qadce
