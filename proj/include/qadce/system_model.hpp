#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "qadce/config.hpp"
#include "qadce/types.hpp"

namespace qadce {

using Rng = std::mt19937_64;

/// Seeds a generator through SplitMix64 so that nearby seeds give unrelated streams.
Rng make_rng(std::uint64_t seed);

using ActivityVector = std::vector<std::uint8_t>;

/// ULA response (1/sqrt(M)) exp(-j m pi sin(theta)), m = 0..M-1.
VectorXc steering_vector(double theta, Index antennas);

/// sin(theta_i) = -1 + 2i/grid_size, i = 0..grid_size-1.
VectorXd grid_angles(Index grid_size);

/// Array response matrix U_R (antennas x grid_size). Only the unitary
/// square case grid_size == antennas is supported.
MatrixXc build_grid(Index antennas, Index grid_size);

ActivityVector sample_activity(Index devices, double active_ratio, Rng& rng);

/// Path loss 10^(-12.81 - 3.67 log10(d)) with d in km.
double large_scale_gain(double distance_km);

/// Uniform over the annulus [min_distance_km, cell_radius_km].
VectorXd sample_distances(const SystemConfig& cfg, Rng& rng);

/// Mean gain over devices divided by the linear SNR.
double noise_variance_for_snr(double snr_db, const VectorXd& gains);

struct ClusterPath {
    double aoa;   // rad
    cdouble gain; // CN(0, 1/clusters)
};

using DevicePaths = std::vector<std::vector<ClusterPath>>;

DevicePaths sample_cluster_paths(const SystemConfig& cfg, Rng& rng);

/// Antenna-domain channel H (antennas x devices) from the cluster paths.
MatrixXc antenna_channel(const DevicePaths& paths, Index antennas);

/// Angular channel Hbar = U_R^H H.
MatrixXc sample_channel(const SystemConfig& cfg, const MatrixXc& grid, Rng& rng);

struct PilotMatrix {
    MatrixXc symbols; // devices x pilot_length, QPSK
};

PilotMatrix generate_pilots(Index devices, Index pilot_length, Rng& rng);

struct Scene {
    ActivityVector activity;  // s
    MatrixXc angular_channel; // Hbar, grid_size x devices
    VectorXd gains;           // g
    MatrixXc aggregate;       // X = Hbar diag(s)
    VectorXd distances_km;
    double noise_variance = 0.0;

    Index devices() const { return static_cast<Index>(activity.size()); }
    Index active_count() const;
};

/// Draws distances, activity, channel in that order and calibrates the
/// noise variance from cfg.snr_db.
Scene generate_scene(const SystemConfig& cfg, const MatrixXc& grid, Rng& rng);

MatrixXc aggregate_from(const MatrixXc& angular_channel, const ActivityVector& activity);

/// [Re(vec Z); Im(vec Z)] with column-major vec.
VectorXd to_real(const MatrixXc& z);
MatrixXc from_real(const VectorXd& v, Index rows, Index cols);

/// The real measurement matrix Phi mapping x = [Re vec X; Im vec X] to
/// y = [Re vec Y; Im vec Y]. Held either in structured form, as the real
/// embedding of (G^{1/2} D)^T kron U_R, or as an explicit matrix.
class MeasurementOperator {
public:
    MeasurementOperator() = default;
    MeasurementOperator(MatrixXc grid, MatrixXc weighted_pilots);

    static MeasurementOperator from_dense(MatrixXd phi);

    bool structured() const noexcept { return structured_; }
    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

    VectorXd apply(const VectorXd& x) const;
    VectorXd apply_transpose(const VectorXd& y) const;

    /// sum_k Phi_ik^2 for every row i.
    VectorXd row_sq_norms() const;
    /// sum_i w_i Phi_ij^2 for every column j, i.e. diag(Phi^T diag(w) Phi).
    VectorXd weighted_col_sq_norms(const VectorXd& row_weights) const;

    MatrixXd dense() const;

    const MatrixXc& grid() const noexcept { return grid_; }
    const MatrixXc& weighted_pilots() const noexcept { return pilots_; }

private:
    bool structured_ = false;
    Index rows_ = 0;
    Index cols_ = 0;
    MatrixXc grid_;   // M x M
    MatrixXc pilots_; // N x T, G^{1/2} D
    MatrixXd dense_;
};

struct RealMeasurement {
    MeasurementOperator phi;
    VectorXd y;      // unquantized, 2MT
    VectorXd x_true; // 2MN
    VectorXd noise;  // 2MT
};

struct Observation {
    MatrixXc received; // Y, M x T
    RealMeasurement measurement;
};

/// Y = U_R X G^{1/2} D + V with V ~ CN(0, scene.noise_variance).
Observation synthesize(const Scene& scene, const PilotMatrix& pilots, const MatrixXc& grid, Rng& rng);

void write_scene_csv(std::ostream& out, const Scene& scene);
void write_measurement_csv(std::ostream& out, const RealMeasurement& meas);

} // namespace qadce
