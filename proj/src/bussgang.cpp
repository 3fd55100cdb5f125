#include "qadce/bussgang.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qadce/gaussian.hpp"

namespace qadce {

VectorXd output_std(const VectorXd& row_sq_norms, double prior_var, double sigma_v2) {
    require(prior_var >= 0.0 && sigma_v2 >= 0.0, ErrorCode::InvalidArgument,
            "output_std: variances must be >= 0");
    return (prior_var * row_sq_norms.array() + sigma_v2 / 2.0).sqrt();
}

VectorXd output_std(const MatrixXd& phi, double prior_var, double sigma_v2) {
    return output_std(VectorXd(phi.rowwise().squaredNorm()), prior_var, sigma_v2);
}

double design_input_std(const VectorXd& sigma_y) {
    require(sigma_y.size() > 0, ErrorCode::InvalidArgument, "design_input_std: empty input");
    return std::sqrt(sigma_y.squaredNorm() / static_cast<double>(sigma_y.size()));
}

namespace {

template <class F>
void for_each_cell(const ScalarQuantizer& q, double sigma, F&& f) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto& t = q.thresholds();
    const auto& l = q.levels();
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double lo = i == 0 ? -inf : t[i - 1] / sigma;
        const double hi = i + 1 == l.size() ? inf : t[i] / sigma;
        f(l[i], lo, hi);
    }
}

} // namespace

double bussgang_gain(const ScalarQuantizer& q, double sigma) {
    require(sigma > 0.0, ErrorCode::InvalidArgument, "bussgang_gain: sigma must be > 0");
    if (q.is_identity())
        return 1.0;
    double sum = 0.0;
    for_each_cell(q, sigma, [&](double level, double lo, double hi) {
        sum += level * (gaussian::pdf(lo) - gaussian::pdf(hi));
    });
    return sum / sigma;
}

double residual_variance(const ScalarQuantizer& q, double sigma) {
    require(sigma > 0.0, ErrorCode::InvalidArgument, "residual_variance: sigma must be > 0");
    if (q.is_identity())
        return 0.0;
    double power = 0.0;
    for_each_cell(q, sigma, [&](double level, double lo, double hi) {
        power += level * level * gaussian::interval_prob(lo, hi);
    });
    const double k = bussgang_gain(q, sigma);
    return std::max(0.0, power - k * k * sigma * sigma);
}

VectorXd EffectiveLinearModel::apply(const VectorXd& x) const {
    return gain.cwiseProduct(phi.apply(x));
}

VectorXd EffectiveLinearModel::apply_transpose(const VectorXd& v) const {
    return phi.apply_transpose(gain.cwiseProduct(v));
}

MatrixXd EffectiveLinearModel::dense_A() const { return gain.asDiagonal() * phi.dense(); }

EffectiveLinearModel build_effective_model(MeasurementOperator phi, const ScalarQuantizer& q,
                                           double sigma_v2, double prior_var) {
    EffectiveLinearModel model{std::move(phi), {}, {}, {}, {}, sigma_v2};
    model.output_std = output_std(model.phi.row_sq_norms(), prior_var, sigma_v2);
    const Index rows = model.phi.rows();
    model.gain.resize(rows);
    model.residual.resize(rows);

    // Components with equal output std share k and r_nq; the structured
    // operator has a handful of distinct values at most.
    double last_sigma = std::numeric_limits<double>::quiet_NaN();
    double k = 1.0, r = 0.0;
    for (Index i = 0; i < rows; ++i) {
        const double s = model.output_std(i);
        require(s > 0.0, ErrorCode::Numeric, "build_effective_model: zero output std; need sigma_v2 > 0 or signal");
        if (s != last_sigma) {
            k = bussgang_gain(q, s);
            r = residual_variance(q, s);
            last_sigma = s;
        }
        model.gain(i) = k;
        model.residual(i) = r;
    }
    model.sigma = (sigma_v2 / 2.0) * model.gain.array().square() + model.residual.array();
    return model;
}

// ---------------------------------------------------------------------------
// CurvatureOperator

CurvatureOperator CurvatureOperator::dense(MatrixXd omega) {
    require(omega.rows() == omega.cols(), ErrorCode::DimensionMismatch, "CurvatureOperator: not square");
    CurvatureOperator op;
    op.mode_ = CurvatureMode::Dense;
    op.size_ = omega.rows();
    op.dense_ = std::move(omega);
    return op;
}

CurvatureOperator CurvatureOperator::diagonal(VectorXd diag) {
    CurvatureOperator op;
    op.mode_ = CurvatureMode::Diagonal;
    op.size_ = diag.size();
    op.diag_ = std::move(diag);
    return op;
}

CurvatureOperator CurvatureOperator::kronecker(double weight, MatrixXc gram, Index grid_size) {
    require(gram.rows() == gram.cols(), ErrorCode::DimensionMismatch, "CurvatureOperator: gram not square");
    CurvatureOperator op;
    op.mode_ = CurvatureMode::Kronecker;
    op.size_ = 2 * gram.rows() * grid_size;
    op.weight_ = weight;
    op.gram_ = std::move(gram);
    op.grid_size_ = grid_size;
    return op;
}

VectorXd CurvatureOperator::apply(const VectorXd& x) const {
    require(x.size() == size_, ErrorCode::DimensionMismatch, "CurvatureOperator::apply: bad length");
    switch (mode_) {
    case CurvatureMode::Dense: return dense_ * x;
    case CurvatureMode::Diagonal: return diag_.cwiseProduct(x);
    case CurvatureMode::Kronecker: {
        // (C kron I) vec X = vec(X C^T)
        const MatrixXc X = from_real(x, grid_size_, gram_.rows());
        return weight_ * to_real(X * gram_.transpose());
    }
    case CurvatureMode::Auto: break;
    }
    fail(ErrorCode::InvalidArgument, "CurvatureOperator: unresolved mode");
}

VectorXd CurvatureOperator::diagonal() const {
    switch (mode_) {
    case CurvatureMode::Dense: return dense_.diagonal();
    case CurvatureMode::Diagonal: return diag_;
    case CurvatureMode::Kronecker: {
        const Index N = gram_.rows();
        VectorXd d(size_);
        for (Index n = 0; n < N; ++n)
            for (Index m = 0; m < grid_size_; ++m) {
                d(n * grid_size_ + m) = weight_ * gram_(n, n).real();
                d(N * grid_size_ + n * grid_size_ + m) = weight_ * gram_(n, n).real();
            }
        return d;
    }
    case CurvatureMode::Auto: break;
    }
    fail(ErrorCode::InvalidArgument, "CurvatureOperator: unresolved mode");
}

double CurvatureOperator::gershgorin_bound(const VectorXd& s) const {
    const bool scaled = s.size() > 0;
    require(!scaled || s.size() == size_, ErrorCode::DimensionMismatch, "gershgorin_bound: bad scaling length");
    switch (mode_) {
    case CurvatureMode::Dense:
        if (!scaled)
            return dense_.cwiseAbs().rowwise().sum().maxCoeff();
        return (dense_.cwiseAbs() * s.cwiseAbs()).cwiseProduct(s.cwiseAbs()).maxCoeff();
    case CurvatureMode::Diagonal:
        if (!scaled)
            return diag_.cwiseAbs().maxCoeff();
        return diag_.cwiseAbs().cwiseProduct(s.cwiseAbs2()).maxCoeff();
    case CurvatureMode::Kronecker: {
        const Index N = gram_.rows();
        VectorXd device_scale = VectorXd::Ones(N);
        if (scaled)
            for (Index n = 0; n < N; ++n)
                device_scale(n) = std::abs(s(n * grid_size_));
        const MatrixXd parts = gram_.real().cwiseAbs() + gram_.imag().cwiseAbs();
        return std::abs(weight_) * (parts * device_scale).cwiseProduct(device_scale).maxCoeff();
    }
    case CurvatureMode::Auto: break;
    }
    fail(ErrorCode::InvalidArgument, "CurvatureOperator: unresolved mode");
}

MatrixXd CurvatureOperator::to_dense() const {
    if (mode_ == CurvatureMode::Dense)
        return dense_;
    if (mode_ == CurvatureMode::Diagonal)
        return diag_.asDiagonal();
    MatrixXd out(size_, size_);
    VectorXd e = VectorXd::Zero(size_);
    for (Index j = 0; j < size_; ++j) {
        e(j) = 1.0;
        out.col(j) = apply(e);
        e(j) = 0.0;
    }
    return out;
}

PowerIterationResult power_iteration(const CurvatureOperator& op, const VectorXd& s, double tol_rel, int max_iters) {
    PowerIterationResult res;
    const Index n = op.size();
    const bool scaled = s.size() > 0;
    require(!scaled || s.size() == n, ErrorCode::DimensionMismatch, "power_iteration: bad scaling length");
    if (n == 0)
        return res;
    if (op.mode() == CurvatureMode::Diagonal) {
        const VectorXd d = op.diagonal();
        res.value = scaled ? d.cwiseProduct(s.cwiseAbs2()).maxCoeff() : d.maxCoeff();
        res.converged = true;
        return res;
    }
    auto apply = [&](const VectorXd& v) -> VectorXd {
        if (!scaled)
            return op.apply(v);
        return s.cwiseProduct(op.apply(s.cwiseProduct(v)));
    };
    VectorXd v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    v.normalize();
    double rayleigh = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        const VectorXd w = apply(v);
        const double next = v.dot(w);
        const double norm = w.norm();
        res.iterations = it;
        if (norm == 0.0) {
            res.value = 0.0;
            res.converged = true;
            return res;
        }
        v = w / norm;
        if (it > 1 && std::abs(next - rayleigh) <= tol_rel * std::abs(next)) {
            res.value = next;
            res.converged = true;
            return res;
        }
        rayleigh = next;
    }
    res.value = rayleigh;
    return res;
}

VectorXd apply_omega1(const EffectiveLinearModel& model, const VectorXd& r) {
    require(r.size() == model.rows(), ErrorCode::DimensionMismatch, "apply_omega1: bad observation length");
    const VectorXd w = model.gain.cwiseQuotient(model.sigma);
    return model.phi.apply_transpose(w.cwiseProduct(r));
}

SolverCoefficients make_coefficients(CurvatureOperator omega2, VectorXd f, MajorizerKind kind) {
    require(omega2.size() == f.size(), ErrorCode::DimensionMismatch, "make_coefficients: size mismatch");
    SolverCoefficients c{VectorXd(), std::move(omega2), std::move(f), kind, 0.0, VectorXd(), true};

    // Jacobi: S = diag(Omega2)^(-1/2); S^-1 (lambda I - S Omega2 S) S^-1 >= 0
    // makes lambda S^-2 a diagonal majorizer.
    VectorXd curvature_diag;
    VectorXd scaling;
    if (kind == MajorizerKind::Jacobi) {
        curvature_diag = c.omega2.diagonal();
        const double floor = 1e-12 * std::max(curvature_diag.maxCoeff(), std::numeric_limits<double>::min());
        curvature_diag = curvature_diag.cwiseMax(floor);
        scaling = curvature_diag.cwiseSqrt().cwiseInverse();
    }

    const PowerIterationResult pi = power_iteration(c.omega2, scaling);
    if (pi.converged) {
        c.J = pi.value * (1.0 + kMajorizerInflation);
    } else {
        c.J = c.omega2.gershgorin_bound(scaling);
        c.J_from_power_iteration = false;
    }
    if (c.J <= 0.0)
        c.J = std::numeric_limits<double>::min();

    if (kind == MajorizerKind::Jacobi)
        c.majorizer = c.J * curvature_diag;
    else
        c.majorizer = VectorXd::Constant(c.f.size(), c.J);
    return c;
}

SolverCoefficients precompute(const EffectiveLinearModel& model, const VectorXd& r_obs, CurvatureMode mode,
                              MajorizerKind kind) {
    require((model.sigma.array() > 0.0).all(), ErrorCode::Numeric, "precompute: Sigma must be positive");
    const VectorXd data_weights = model.gain.cwiseQuotient(model.sigma);
    const VectorXd curvature_weights = model.gain.cwiseProduct(data_weights); // k^2 / Sigma

    const double w0 = curvature_weights(0);
    const bool uniform = model.phi.structured() &&
                         ((curvature_weights.array() - w0).abs() <= 1e-12 * std::abs(w0)).all();
    if (mode == CurvatureMode::Auto) {
        if (uniform)
            mode = CurvatureMode::Kronecker;
        else if (model.cols() <= kDenseCurvatureLimit)
            mode = CurvatureMode::Dense;
        else
            mode = CurvatureMode::Diagonal;
    }

    CurvatureOperator omega2 = CurvatureOperator::diagonal(VectorXd());
    switch (mode) {
    case CurvatureMode::Kronecker: {
        require(uniform, ErrorCode::InvalidArgument,
                "precompute: Kronecker curvature needs a structured operator with uniform weights");
        const MatrixXc& B = model.phi.weighted_pilots();
        omega2 = CurvatureOperator::kronecker(w0, B.conjugate() * B.transpose(), model.phi.grid().cols());
        break;
    }
    case CurvatureMode::Dense: {
        const MatrixXd phi = model.phi.dense();
        omega2 = CurvatureOperator::dense(phi.transpose() * curvature_weights.asDiagonal() * phi);
        break;
    }
    case CurvatureMode::Diagonal:
        omega2 = CurvatureOperator::diagonal(model.phi.weighted_col_sq_norms(curvature_weights));
        break;
    case CurvatureMode::Auto: break;
    }

    VectorXd f = model.phi.apply_transpose(data_weights.cwiseProduct(r_obs));
    require(f.allFinite(), ErrorCode::Numeric, "precompute: non-finite linear term");
    SolverCoefficients c = make_coefficients(std::move(omega2), std::move(f), kind);
    c.data_weights = data_weights;
    return c;
}

void write_model_csv(std::ostream& out, const EffectiveLinearModel& model) {
    out.precision(17);
    out << "index,gain,sigma,residual,output_std\n";
    for (Index i = 0; i < model.rows(); ++i)
        out << i << ',' << model.gain(i) << ',' << model.sigma(i) << ',' << model.residual(i) << ','
            << model.output_std(i) << '\n';
}

} // namespace qadce
