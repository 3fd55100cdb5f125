#include "qadce/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qadce {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::Config: return "config";
    case ErrorCode::NotConverged: return "not_converged";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

const char* to_string(CurvatureMode mode) noexcept {
    switch (mode) {
    case CurvatureMode::Auto: return "auto";
    case CurvatureMode::Dense: return "dense";
    case CurvatureMode::Kronecker: return "kronecker";
    case CurvatureMode::Diagonal: return "diagonal";
    }
    return "auto";
}

CurvatureMode parse_curvature_mode(std::string_view text) {
    if (text == "auto") return CurvatureMode::Auto;
    if (text == "dense") return CurvatureMode::Dense;
    if (text == "kronecker") return CurvatureMode::Kronecker;
    if (text == "diagonal") return CurvatureMode::Diagonal;
    fail(ErrorCode::Config, "unknown curvature mode '" + std::string(text) + "'");
}

const char* to_string(MajorizerKind kind) noexcept {
    return kind == MajorizerKind::Scalar ? "scalar" : "jacobi";
}

MajorizerKind parse_majorizer_kind(std::string_view text) {
    if (text == "scalar") return MajorizerKind::Scalar;
    if (text == "jacobi") return MajorizerKind::Jacobi;
    fail(ErrorCode::Config, "unknown majorizer '" + std::string(text) + "'");
}

std::string format_bits(const std::optional<int>& bits) {
    return bits ? std::to_string(*bits) : std::string("inf");
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view v) {
    // std::from_chars for double is not available on every supported libstdc++.
    std::string buf(v);
    char* end = nullptr;
    const double d = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(d))
        fail(ErrorCode::Config, "key '" + std::string(key) + "': not a finite number: '" + buf + "'");
    return d;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        fail(ErrorCode::Config, "key '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::Config, "key '" + std::string(key) + "': not a boolean: '" + std::string(v) + "'");
}

} // namespace

void SystemConfig::set(std::string_view key, std::string_view raw) {
    const std::string_view v = trim(raw);
    if (key == "devices" || key == "N") devices = parse_int<Index>(key, v);
    else if (key == "antennas" || key == "M") {
        // The grid must match the array, so it follows unless set afterwards.
        antennas = parse_int<Index>(key, v);
        grid_size = antennas;
    }
    else if (key == "grid_size") grid_size = parse_int<Index>(key, v);
    else if (key == "pilot_length" || key == "T") pilot_length = parse_int<Index>(key, v);
    else if (key == "active_ratio" || key == "q_s") active_ratio = parse_double(key, v);
    else if (key == "clusters") clusters = parse_int<Index>(key, v);
    else if (key == "on_grid_aoa") on_grid_aoa = parse_bool(key, v);
    else if (key == "snr_db") snr_db = parse_double(key, v);
    else if (key == "cell_radius_km") cell_radius_km = parse_double(key, v);
    else if (key == "min_distance_km") min_distance_km = parse_double(key, v);
    else if (key == "adc_bits") {
        if (v == "inf" || v == "none")
            adc_bits.reset();
        else
            adc_bits = parse_int<int>(key, v);
    }
    else if (key == "prior_a") prior_a = parse_double(key, v);
    else if (key == "prior_b") prior_b = parse_double(key, v);
    else if (key == "epsilon_rel") epsilon_rel = parse_double(key, v);
    else if (key == "max_iters") max_iters = parse_int<int>(key, v);
    else if (key == "tol_rel") tol_rel = parse_double(key, v);
    else if (key == "objective_check") objective_check = parse_bool(key, v);
    else if (key == "curvature") curvature = parse_curvature_mode(v);
    else if (key == "majorizer") majorizer = parse_majorizer_kind(v);
    else if (key == "seed") seed = parse_int<std::uint64_t>(key, v);
    else fail(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
}

void SystemConfig::load(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s(line);
        if (auto hash = s.find('#'); hash != std::string_view::npos)
            s = s.substr(0, hash);
        s = trim(s);
        if (s.empty())
            continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected 'key = value'");
        set(trim(s.substr(0, eq)), s.substr(eq + 1));
    }
}

void SystemConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open config file '" + path + "'");
    load(in);
}

void SystemConfig::dump(std::ostream& out) const {
    std::ostringstream os;
    os.precision(17);
    os << "devices = " << devices << '\n'
       << "antennas = " << antennas << '\n'
       << "grid_size = " << grid_size << '\n'
       << "pilot_length = " << pilot_length << '\n'
       << "active_ratio = " << active_ratio << '\n'
       << "clusters = " << clusters << '\n'
       << "on_grid_aoa = " << (on_grid_aoa ? "true" : "false") << '\n'
       << "snr_db = " << snr_db << '\n'
       << "cell_radius_km = " << cell_radius_km << '\n'
       << "min_distance_km = " << min_distance_km << '\n'
       << "adc_bits = " << format_bits(adc_bits) << '\n'
       << "prior_a = " << prior_a << '\n'
       << "prior_b = " << prior_b << '\n'
       << "epsilon_rel = " << epsilon_rel << '\n'
       << "max_iters = " << max_iters << '\n'
       << "tol_rel = " << tol_rel << '\n'
       << "objective_check = " << (objective_check ? "true" : "false") << '\n'
       << "curvature = " << to_string(curvature) << '\n'
       << "majorizer = " << to_string(majorizer) << '\n'
       << "seed = " << seed << '\n';
    out << os.str();
}

void SystemConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok)
            fail(ErrorCode::Config, what);
    };
    check(devices >= 1, "devices must be >= 1");
    check(antennas >= 1, "antennas must be >= 1");
    check(grid_size == antennas, "grid_size must equal antennas");
    check(pilot_length >= 1, "pilot_length must be >= 1");
    check(active_ratio >= 0.0 && active_ratio <= 1.0, "active_ratio must lie in [0, 1]");
    check(clusters >= 1 && clusters <= grid_size, "clusters must lie in [1, grid_size]");
    check(min_distance_km > 0.0 && cell_radius_km >= min_distance_km,
          "need 0 < min_distance_km <= cell_radius_km");
    check(!adc_bits || (*adc_bits >= 1 && *adc_bits <= 8), "adc_bits must be in 1..8 or inf");
    check(prior_a > 0.0 && prior_b > 0.0 && epsilon_rel > 0.0, "prior_a, prior_b, epsilon_rel must be > 0");
    check(max_iters >= 1, "max_iters must be >= 1");
    check(tol_rel > 0.0, "tol_rel must be > 0");
}

SystemConfig SystemConfig::large_profile() {
    SystemConfig cfg;
    cfg.devices = 200;
    cfg.antennas = 128;
    cfg.grid_size = 128;
    cfg.pilot_length = 100;
    cfg.curvature = CurvatureMode::Auto;
    return cfg;
}

} // namespace qadce
