#include "qadce/system_model.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace qadce {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

cdouble complex_normal(Rng& rng, double variance) {
    std::normal_distribution<double> gauss;
    const double scale = std::sqrt(variance / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    return {scale * re, scale * im};
}

} // namespace

Rng make_rng(std::uint64_t seed) {
    std::uint64_t state = seed;
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        const std::uint64_t v = splitmix64(state);
        words[i] = static_cast<std::uint32_t>(v);
        words[i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

VectorXc steering_vector(double theta, Index antennas) {
    VectorXc u(antennas);
    const double phase = std::numbers::pi * std::sin(theta);
    const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
    for (Index m = 0; m < antennas; ++m)
        u(m) = scale * std::polar(1.0, -phase * static_cast<double>(m));
    return u;
}

VectorXd grid_angles(Index grid_size) {
    VectorXd theta(grid_size);
    for (Index i = 0; i < grid_size; ++i) {
        const double s = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_size);
        theta(i) = std::asin(s);
    }
    return theta;
}

MatrixXc build_grid(Index antennas, Index grid_size) {
    require(antennas >= 1, ErrorCode::InvalidArgument, "build_grid: antennas must be >= 1");
    require(grid_size == antennas, ErrorCode::InvalidArgument,
            "build_grid: grid size must equal the antenna count");
    const VectorXd theta = grid_angles(grid_size);
    MatrixXc grid(antennas, grid_size);
    for (Index i = 0; i < grid_size; ++i)
        grid.col(i) = steering_vector(theta(i), antennas);
    return grid;
}

ActivityVector sample_activity(Index devices, double active_ratio, Rng& rng) {
    require(active_ratio >= 0.0 && active_ratio <= 1.0, ErrorCode::InvalidArgument,
            "sample_activity: active ratio outside [0, 1]");
    std::bernoulli_distribution coin(active_ratio);
    ActivityVector s(static_cast<std::size_t>(devices));
    for (auto& v : s)
        v = coin(rng) ? 1 : 0;
    return s;
}

double large_scale_gain(double distance_km) {
    require(distance_km > 0.0, ErrorCode::InvalidArgument, "large_scale_gain: distance must be > 0");
    return std::pow(10.0, -12.81 - 3.67 * std::log10(distance_km));
}

VectorXd sample_distances(const SystemConfig& cfg, Rng& rng) {
    const double r0 = cfg.min_distance_km;
    const double r1 = cfg.cell_radius_km;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXd d(cfg.devices);
    for (Index n = 0; n < cfg.devices; ++n)
        d(n) = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
    return d;
}

double noise_variance_for_snr(double snr_db, const VectorXd& gains) {
    require(gains.size() > 0, ErrorCode::InvalidArgument, "noise_variance_for_snr: no devices");
    return gains.mean() / std::pow(10.0, snr_db / 10.0);
}

DevicePaths sample_cluster_paths(const SystemConfig& cfg, Rng& rng) {
    require(cfg.clusters <= cfg.grid_size, ErrorCode::InvalidArgument,
            "sample_channel: more clusters than grid points");
    const VectorXd grid_theta = grid_angles(cfg.grid_size);
    std::uniform_real_distribution<double> aoa(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    std::uniform_int_distribution<Index> grid_pick(0, cfg.grid_size - 1);
    const double path_variance = 1.0 / static_cast<double>(cfg.clusters);

    DevicePaths paths(static_cast<std::size_t>(cfg.devices));
    for (auto& device : paths) {
        device.reserve(static_cast<std::size_t>(cfg.clusters));
        for (Index c = 0; c < cfg.clusters; ++c) {
            const double theta = cfg.on_grid_aoa ? grid_theta(grid_pick(rng)) : aoa(rng);
            device.push_back({theta, complex_normal(rng, path_variance)});
        }
    }
    return paths;
}

MatrixXc antenna_channel(const DevicePaths& paths, Index antennas) {
    MatrixXc h = MatrixXc::Zero(antennas, static_cast<Index>(paths.size()));
    for (std::size_t n = 0; n < paths.size(); ++n)
        for (const auto& p : paths[n])
            h.col(static_cast<Index>(n)) += p.gain * steering_vector(p.aoa, antennas);
    return h;
}

MatrixXc sample_channel(const SystemConfig& cfg, const MatrixXc& grid, Rng& rng) {
    const DevicePaths paths = sample_cluster_paths(cfg, rng);
    return grid.adjoint() * antenna_channel(paths, cfg.antennas);
}

PilotMatrix generate_pilots(Index devices, Index pilot_length, Rng& rng) {
    require(devices >= 1 && pilot_length >= 1, ErrorCode::InvalidArgument,
            "generate_pilots: dimensions must be >= 1");
    const double a = 1.0 / std::sqrt(2.0);
    std::uniform_int_distribution<int> symbol(0, 3);
    PilotMatrix d{MatrixXc(devices, pilot_length)};
    for (Index t = 0; t < pilot_length; ++t)
        for (Index n = 0; n < devices; ++n) {
            const int k = symbol(rng);
            d.symbols(n, t) = cdouble((k & 1) ? -a : a, (k & 2) ? -a : a);
        }
    return d;
}

Index Scene::active_count() const {
    Index count = 0;
    for (auto v : activity)
        count += v;
    return count;
}

MatrixXc aggregate_from(const MatrixXc& angular_channel, const ActivityVector& activity) {
    require(angular_channel.cols() == static_cast<Index>(activity.size()), ErrorCode::DimensionMismatch,
            "aggregate_from: activity length differs from channel columns");
    MatrixXc x = angular_channel;
    for (Index n = 0; n < x.cols(); ++n)
        if (!activity[static_cast<std::size_t>(n)])
            x.col(n).setZero();
    return x;
}

Scene generate_scene(const SystemConfig& cfg, const MatrixXc& grid, Rng& rng) {
    cfg.validate();
    Scene scene;
    scene.distances_km = sample_distances(cfg, rng);
    scene.gains = scene.distances_km.unaryExpr([](double d) { return large_scale_gain(d); });
    scene.activity = sample_activity(cfg.devices, cfg.active_ratio, rng);
    scene.angular_channel = sample_channel(cfg, grid, rng);
    scene.aggregate = aggregate_from(scene.angular_channel, scene.activity);
    scene.noise_variance = noise_variance_for_snr(cfg.snr_db, scene.gains);
    return scene;
}

VectorXd to_real(const MatrixXc& z) {
    const Index n = z.size();
    VectorXd v(2 * n);
    const cdouble* data = z.data();
    for (Index i = 0; i < n; ++i) {
        v(i) = data[i].real();
        v(n + i) = data[i].imag();
    }
    return v;
}

MatrixXc from_real(const VectorXd& v, Index rows, Index cols) {
    const Index n = rows * cols;
    require(v.size() == 2 * n, ErrorCode::DimensionMismatch, "from_real: length is not 2*rows*cols");
    MatrixXc z(rows, cols);
    cdouble* data = z.data();
    for (Index i = 0; i < n; ++i)
        data[i] = cdouble(v(i), v(n + i));
    return z;
}

// ---------------------------------------------------------------------------
// MeasurementOperator

MeasurementOperator::MeasurementOperator(MatrixXc grid, MatrixXc weighted_pilots)
    : structured_(true), grid_(std::move(grid)), pilots_(std::move(weighted_pilots)) {
    require(grid_.rows() == grid_.cols(), ErrorCode::DimensionMismatch,
            "MeasurementOperator: grid must be square");
    rows_ = 2 * grid_.rows() * pilots_.cols();
    cols_ = 2 * grid_.cols() * pilots_.rows();
}

MeasurementOperator MeasurementOperator::from_dense(MatrixXd phi) {
    MeasurementOperator op;
    op.rows_ = phi.rows();
    op.cols_ = phi.cols();
    op.dense_ = std::move(phi);
    return op;
}

VectorXd MeasurementOperator::apply(const VectorXd& x) const {
    require(x.size() == cols_, ErrorCode::DimensionMismatch, "MeasurementOperator::apply: bad length");
    if (!structured_)
        return dense_ * x;
    const MatrixXc X = from_real(x, grid_.cols(), pilots_.rows());
    const MatrixXc Z = grid_ * X * pilots_;
    return to_real(Z);
}

VectorXd MeasurementOperator::apply_transpose(const VectorXd& y) const {
    require(y.size() == rows_, ErrorCode::DimensionMismatch,
            "MeasurementOperator::apply_transpose: bad length");
    if (!structured_)
        return dense_.transpose() * y;
    const MatrixXc Z = from_real(y, grid_.rows(), pilots_.cols());
    const MatrixXc X = grid_.adjoint() * Z * pilots_.adjoint();
    return to_real(X);
}

VectorXd MeasurementOperator::row_sq_norms() const {
    if (!structured_)
        return dense_.rowwise().squaredNorm();
    const Index M = grid_.rows();
    const Index T = pilots_.cols();
    const VectorXd grid_rows = grid_.rowwise().squaredNorm();
    const VectorXd pilot_cols = pilots_.colwise().squaredNorm().transpose();
    VectorXd norms(rows_);
    for (Index t = 0; t < T; ++t)
        for (Index m = 0; m < M; ++m) {
            const double v = grid_rows(m) * pilot_cols(t);
            norms(t * M + m) = v;
            norms(M * T + t * M + m) = v;
        }
    return norms;
}

VectorXd MeasurementOperator::weighted_col_sq_norms(const VectorXd& row_weights) const {
    require(row_weights.size() == rows_, ErrorCode::DimensionMismatch,
            "weighted_col_sq_norms: weight length differs from rows");
    if (!structured_)
        return (dense_.array().square().colwise() * row_weights.array()).colwise().sum().transpose();
    const Index M = grid_.rows();
    const Index Mg = grid_.cols();
    const Index N = pilots_.rows();
    const Index T = pilots_.cols();
    const Index half = Mg * N;
    VectorXd out = VectorXd::Zero(cols_);
    for (Index n = 0; n < N; ++n)
        for (Index k = 0; k < Mg; ++k) {
            double re_col = 0.0;
            double im_col = 0.0;
            for (Index t = 0; t < T; ++t)
                for (Index m = 0; m < M; ++m) {
                    const cdouble e = pilots_(n, t) * grid_(m, k);
                    const double wt = row_weights(t * M + m);
                    const double wb = row_weights(M * T + t * M + m);
                    const double re2 = e.real() * e.real();
                    const double im2 = e.imag() * e.imag();
                    re_col += wt * re2 + wb * im2;
                    im_col += wt * im2 + wb * re2;
                }
            out(n * Mg + k) = re_col;
            out(half + n * Mg + k) = im_col;
        }
    return out;
}

MatrixXd MeasurementOperator::dense() const {
    if (!structured_)
        return dense_;
    const Index M = grid_.rows();
    const Index Mg = grid_.cols();
    const Index N = pilots_.rows();
    const Index T = pilots_.cols();
    MatrixXc phic(M * T, Mg * N);
    for (Index t = 0; t < T; ++t)
        for (Index n = 0; n < N; ++n)
            phic.block(t * M, n * Mg, M, Mg) = pilots_(n, t) * grid_;
    MatrixXd phi(rows_, cols_);
    const Index r = M * T;
    const Index c = Mg * N;
    phi.topLeftCorner(r, c) = phic.real();
    phi.topRightCorner(r, c) = -phic.imag();
    phi.bottomLeftCorner(r, c) = phic.imag();
    phi.bottomRightCorner(r, c) = phic.real();
    return phi;
}

Observation synthesize(const Scene& scene, const PilotMatrix& pilots, const MatrixXc& grid, Rng& rng) {
    const Index N = scene.devices();
    const Index T = pilots.symbols.cols();
    const Index M = grid.rows();
    require(pilots.symbols.rows() == N && scene.aggregate.cols() == N && scene.gains.size() == N &&
                scene.aggregate.rows() == grid.cols(),
            ErrorCode::DimensionMismatch, "synthesize: scene, pilots and grid dimensions disagree");

    MatrixXc weighted = pilots.symbols;
    for (Index n = 0; n < N; ++n)
        weighted.row(n) *= std::sqrt(scene.gains(n));

    MatrixXc noise(M, T);
    for (Index t = 0; t < T; ++t)
        for (Index m = 0; m < M; ++m)
            noise(m, t) = complex_normal(rng, scene.noise_variance);

    Observation obs{grid * scene.aggregate * weighted + noise,
                    {MeasurementOperator(grid, weighted), VectorXd(), to_real(scene.aggregate), to_real(noise)}};
    obs.measurement.y = to_real(obs.received);
    return obs;
}

void write_scene_csv(std::ostream& out, const Scene& scene) {
    out << std::setprecision(17);
    out << "device,active,distance_km,gain,entry,re,im\n";
    for (Index n = 0; n < scene.devices(); ++n)
        for (Index m = 0; m < scene.aggregate.rows(); ++m) {
            const cdouble v = scene.aggregate(m, n);
            out << n << ',' << int(scene.activity[static_cast<std::size_t>(n)]) << ','
                << scene.distances_km(n) << ',' << scene.gains(n) << ',' << m << ',' << v.real() << ','
                << v.imag() << '\n';
        }
}

void write_measurement_csv(std::ostream& out, const RealMeasurement& meas) {
    out << std::setprecision(17);
    out << "index,y,noise\n";
    for (Index i = 0; i < meas.y.size(); ++i)
        out << i << ',' << meas.y(i) << ',' << meas.noise(i) << '\n';
}

} // namespace qadce
