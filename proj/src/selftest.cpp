#include "qadce/selftest.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qadce/bussgang.hpp"
#include "qadce/detector.hpp"
#include "qadce/experiment.hpp"
#include "qadce/mm_solver.hpp"
#include "qadce/quantizer.hpp"
#include "qadce/sparse_prior.hpp"
#include "qadce/system_model.hpp"

namespace qadce {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
SelftestCheck timed(std::string name, F&& body) {
    SelftestCheck c;
    c.name = std::move(name);
    const auto start = Clock::now();
    try {
        std::ostringstream detail;
        c.passed = body(detail);
        c.detail = detail.str();
    } catch (const std::exception& e) {
        c.passed = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return c;
}

// Analytic k and r_nq against sample moments of Q(y) y and (Q(y) - k y)^2.
bool bussgang_monte_carlo(std::ostringstream& out, std::uint64_t samples, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int bits : {1, 2, 3}) {
        const ScalarQuantizer& q = unit_lloyd_max(bits);
        for (double sigma : {0.5, 1.0, 2.0}) {
            const double k = bussgang_gain(q, sigma);
            const double r = residual_variance(q, sigma);
            double sk = 0.0, skk = 0.0, sr = 0.0, srr = 0.0;
            for (std::uint64_t i = 0; i < samples; ++i) {
                const double y = sigma * normal(rng);
                const double qy = q(y);
                const double kv = qy * y / (sigma * sigma);
                const double rv = (qy - k * y) * (qy - k * y);
                sk += kv;
                skk += kv * kv;
                sr += rv;
                srr += rv * rv;
            }
            const double n = static_cast<double>(samples);
            const double k_mc = sk / n, r_mc = sr / n;
            const double k_se = std::sqrt(std::max(skk / n - k_mc * k_mc, 0.0) / n);
            const double r_se = std::sqrt(std::max(srr / n - r_mc * r_mc, 0.0) / n);
            const double zk = k_se > 0 ? std::abs(k - k_mc) / k_se : 0.0;
            const double zr = r_se > 0 ? std::abs(r - r_mc) / r_se : 0.0;
            worst = std::max({worst, zk, zr});
        }
    }
    const ScalarQuantizer sign = ScalarQuantizer::from_table({0.0}, {-1.0, 1.0});
    const double k1 = bussgang_gain(sign, 1.0);
    const double r1 = residual_variance(sign, 1.0);
    const double k_err = std::abs(k1 - std::sqrt(2.0 / std::numbers::pi));
    const double r_err = std::abs(r1 - (1.0 - 2.0 / std::numbers::pi));
    out << "max |z| " << worst << " over 9 cases; 1-bit errors k " << k_err << " r " << r_err;
    return worst <= 3.0 && k_err <= 1e-3 && r_err <= 1e-3;
}

bool lloyd_max_table(std::ostringstream& out) {
    const ScalarQuantizer q = lloyd_max_design(2, 1.0);
    const double t[] = {-0.9816, 0.0, 0.9816};
    const double l[] = {-1.5104, -0.4528, 0.4528, 1.5104};
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        err = std::max(err, std::abs(q.thresholds()[static_cast<std::size_t>(i)] - t[i]));
    for (int i = 0; i < 4; ++i)
        err = std::max(err, std::abs(q.levels()[static_cast<std::size_t>(i)] - l[i]));
    out << "max table deviation " << err;
    return err <= 1e-3;
}

// Posterior odds of one device evaluated straight from the two mixture
// branches, one entry at a time.
bool brute_force_active(const VectorXd& x, Index M, const PriorHyper& h) {
    const double pi = std::numbers::pi;
    double log_p0 = std::log(1.0 - h.active_ratio);
    double log_p1 = std::log(h.active_ratio);
    for (Index m = 0; m < M; ++m) {
        const double u = x(m) * x(m) + x(m + M) * x(m + M);
        log_p0 += -std::log(pi * h.epsilon) - u / h.epsilon;
        log_p1 += std::log(h.a / (pi * h.b)) - (1.0 + h.a) * std::log1p(u / h.b);
    }
    return log_p1 > log_p0;
}

bool detector_oracle(std::ostringstream& out, int cases, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int disagreements = 0, active = 0, total = 0;
    for (Index M : {Index{1}, Index{4}, Index{128}}) {
        PriorHyper h;
        h.epsilon = 1e-2 / (2.0 * static_cast<double>(M));
        const DeviceLayout layout{M, 1};
        // Energies spanning both sides of the decision boundary.
        const double boundary = (activity_threshold(M, h) + 30.0 * static_cast<double>(M)) * h.epsilon;
        for (int c = 0; c < cases / 3; ++c) {
            const double energy = boundary * std::pow(10.0, -2.0 + 3.0 * unit(rng));
            VectorXd x(2 * M);
            for (Index i = 0; i < 2 * M; ++i)
                x(i) = normal(rng);
            x *= std::sqrt(energy) / x.norm();
            const DetectionResult d = detect(x, layout, h);
            const bool oracle = brute_force_active(x, M, h);
            disagreements += (d.s_hat[0] != 0) != oracle;
            active += oracle;
            ++total;
        }
    }
    out << disagreements << " disagreements in " << total << " cases (" << active << " active)";
    return disagreements == 0 && active > 0 && active < total;
}

bool mm_descent(std::ostringstream& out, int instances, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.devices = 40;
    cfg.antennas = cfg.grid_size = 16;
    cfg.pilot_length = 32;
    cfg.active_ratio = 0.1;
    cfg.adc_bits = 2;
    cfg.snr_db = 10.0;
    cfg.objective_check = true;
    double worst = 0.0;
    int violations = 0;
    for (int i = 0; i < instances; ++i) {
        const TrialOutcome o = run_trial_full(cfg, seed + static_cast<std::uint64_t>(i));
        const auto& tr = o.state.obj_trace;
        for (std::size_t j = 1; j < tr.size(); ++j) {
            const double rise = (tr[j] - tr[j - 1]) / std::max(std::abs(tr[j - 1]), 1e-300);
            worst = std::max(worst, rise);
            violations += tr[j] > tr[j - 1] + 1e-9 * std::abs(tr[j - 1]);
        }
    }
    out << violations << " ascent steps over " << instances << " instances; max relative rise " << worst;
    return violations == 0;
}

bool quadratic_majorization(std::ostringstream& out, int cases, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cases; ++c) {
        MatrixXd g(6, 6);
        for (Index i = 0; i < g.size(); ++i)
            g(i) = normal(rng);
        const MatrixXd omega = g * g.transpose();
        const double lmax = Eigen::SelfAdjointEigenSolver<MatrixXd>(omega, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        VectorXd x(6), x0(6);
        for (Index i = 0; i < 6; ++i) {
            x(i) = normal(rng);
            x0(i) = normal(rng);
        }
        worst = std::min(worst, majorize_quadratic_slack(omega, lmax * MatrixXd::Identity(6, 6), x, x0));
    }
    out << "min slack " << worst << " over " << cases << " cases";
    return worst >= -1e-10;
}

// Integral of the M = N = 1 prior over the complex plane on a tan-mapped grid.
bool prior_normalization(std::ostringstream& out, int points) {
    PriorHyper h;
    h.a = 2.0;
    h.b = 0.5;
    h.epsilon = 0.05;
    const DeviceLayout layout{1, 1};
    const double pi = std::numbers::pi;
    const double scale = 0.5;
    const double dt = 2.0 / points;
    VectorXd x(2);
    double total = 0.0;
    for (int i = 0; i < points; ++i) {
        const double ti = -1.0 + (i + 0.5) * dt;
        const double ci = std::cos(0.5 * pi * ti);
        x(0) = scale * std::tan(0.5 * pi * ti);
        const double wi = scale * 0.5 * pi / (ci * ci) * dt;
        for (int j = 0; j < points; ++j) {
            const double tj = -1.0 + (j + 0.5) * dt;
            const double cj = std::cos(0.5 * pi * tj);
            x(1) = scale * std::tan(0.5 * pi * tj);
            const double wj = scale * 0.5 * pi / (cj * cj) * dt;
            total += std::exp(log_prior(x, layout, h)) * wi * wj;
        }
    }
    out << "integral " << total;
    return std::abs(total - 1.0) <= 1e-3;
}

} // namespace

std::vector<SelftestCheck> run_selftest(const SelftestOptions& opts) {
    const std::uint64_t s = opts.seed;
    std::vector<SelftestCheck> checks;
    checks.push_back(timed("bussgang_monte_carlo", [&](auto& o) {
        return bussgang_monte_carlo(o, opts.full ? 10'000'000ULL : 1'000'000ULL, s);
    }));
    checks.push_back(timed("lloyd_max_table", [&](auto& o) { return lloyd_max_table(o); }));
    checks.push_back(timed("detector_oracle", [&](auto& o) { return detector_oracle(o, opts.full ? 10000 : 3000, s + 1); }));
    checks.push_back(timed("mm_descent", [&](auto& o) { return mm_descent(o, opts.full ? 100 : 10, s + 2); }));
    checks.push_back(timed("quadratic_majorization", [&](auto& o) { return quadratic_majorization(o, 1000, s + 3); }));
    checks.push_back(timed("prior_normalization", [&](auto& o) { return prior_normalization(o, opts.full ? 1500 : 800); }));
    return checks;
}

} // namespace qadce
