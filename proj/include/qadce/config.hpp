#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "qadce/types.hpp"

namespace qadce {

/// How the curvature matrix A^T Sigma^-1 A is held by the solver.
enum class CurvatureMode {
    Auto,      ///< Kronecker when exact, else dense up to kDenseCurvatureLimit, else diagonal
    Dense,     ///< explicit 2MN x 2MN matrix
    Kronecker, ///< exact structured form (requires uniform Bussgang weights)
    Diagonal,  ///< diagonal approximation
};

inline constexpr Index kDenseCurvatureLimit = 4096;

/// Diagonal majorizer of the curvature used by the MM update.
enum class MajorizerKind {
    Scalar, ///< lambda_max(Omega2) I
    Jacobi, ///< lambda_max(S Omega2 S) S^-2 with S = diag(Omega2)^(-1/2)
};

const char* to_string(MajorizerKind kind) noexcept;
MajorizerKind parse_majorizer_kind(std::string_view text);

const char* to_string(CurvatureMode mode) noexcept;
CurvatureMode parse_curvature_mode(std::string_view text);

/// Every scenario, prior and solver knob of one simulation point. Config file
/// keys mirror these field names one-to-one.
struct SystemConfig {
    Index devices = 50;        // N
    Index antennas = 32;       // M
    Index grid_size = 32;      // angular grid, must equal antennas
    Index pilot_length = 64;   // T
    double active_ratio = 0.1; // q_s
    Index clusters = 1;        // scattering clusters per device
    bool on_grid_aoa = false;  // draw cluster AoAs from the grid angles
    double snr_db = 10.0;
    double cell_radius_km = 1.0;
    double min_distance_km = 0.05;
    std::optional<int> adc_bits = 3; // nullopt: unquantized

    double prior_a = 1e-6;
    double prior_b = 1e-6;
    /// Inactive-slab variance relative to the active per-component variance 1/(2M).
    double epsilon_rel = 1e-2;

    int max_iters = 500;
    double tol_rel = 1e-6;
    bool objective_check = false;
    CurvatureMode curvature = CurvatureMode::Auto;
    MajorizerKind majorizer = MajorizerKind::Jacobi;

    std::uint64_t seed = 1;

    void validate() const;

    /// Applies one `key = value` assignment. Throws Error(Config) on unknown
    /// keys or unparsable values.
    void set(std::string_view key, std::string_view value);

    /// Reads `key = value` lines; `#` starts a comment.
    void load(std::istream& in);
    void load_file(const std::string& path);

    /// Writes every key in loadable form.
    void dump(std::ostream& out) const;

    static SystemConfig desk_profile() { return {}; }
    static SystemConfig large_profile();
};

std::string format_bits(const std::optional<int>& bits);

} // namespace qadce
