#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qadce/config.hpp"

using namespace qadce;

TEST_CASE("desk defaults validate and match the documented profile") {
    const SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.devices == 50);
    CHECK(cfg.antennas == 32);
    CHECK(cfg.grid_size == 32);
    CHECK(cfg.pilot_length == 64);
    CHECK(cfg.active_ratio == 0.1);
    REQUIRE(cfg.adc_bits.has_value());
    CHECK(*cfg.adc_bits == 3);
    CHECK(cfg.prior_a == 1e-6);
    CHECK(cfg.prior_b == 1e-6);
    CHECK(cfg.max_iters == 500);
    CHECK(cfg.tol_rel == 1e-6);
}

TEST_CASE("large profile") {
    const SystemConfig cfg = SystemConfig::large_profile();
    CHECK(cfg.devices == 200);
    CHECK(cfg.antennas == 128);
    CHECK(cfg.grid_size == 128);
    CHECK(cfg.pilot_length == 100);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("set accepts every key and the short aliases") {
    SystemConfig cfg;
    cfg.set("N", "20");
    cfg.set("M", "16");
    cfg.set("T", " 40 ");
    cfg.set("q_s", "0.2");
    cfg.set("clusters", "2");
    cfg.set("on_grid_aoa", "yes");
    cfg.set("snr_db", "-5");
    cfg.set("cell_radius_km", "2");
    cfg.set("min_distance_km", "0.1");
    cfg.set("adc_bits", "inf");
    cfg.set("prior_a", "1e-3");
    cfg.set("prior_b", "2e-3");
    cfg.set("epsilon_rel", "0.5");
    cfg.set("max_iters", "10");
    cfg.set("tol_rel", "1e-4");
    cfg.set("objective_check", "on");
    cfg.set("curvature", "dense");
    cfg.set("majorizer", "scalar");
    cfg.set("seed", "99");
    CHECK(cfg.devices == 20);
    CHECK(cfg.antennas == 16);
    CHECK(cfg.grid_size == 16); // follows the array size
    CHECK(cfg.pilot_length == 40);
    CHECK(cfg.active_ratio == 0.2);
    CHECK(cfg.clusters == 2);
    CHECK(cfg.on_grid_aoa);
    CHECK(cfg.snr_db == -5.0);
    CHECK(cfg.cell_radius_km == 2.0);
    CHECK(cfg.min_distance_km == 0.1);
    CHECK_FALSE(cfg.adc_bits.has_value());
    CHECK(cfg.prior_a == 1e-3);
    CHECK(cfg.prior_b == 2e-3);
    CHECK(cfg.epsilon_rel == 0.5);
    CHECK(cfg.max_iters == 10);
    CHECK(cfg.tol_rel == 1e-4);
    CHECK(cfg.objective_check);
    CHECK(cfg.curvature == CurvatureMode::Dense);
    CHECK(cfg.majorizer == MajorizerKind::Scalar);
    CHECK(cfg.seed == 99u);
    CHECK_NOTHROW(cfg.validate());

    cfg.set("adc_bits", "none");
    CHECK_FALSE(cfg.adc_bits.has_value());
    cfg.set("adc_bits", "2");
    CHECK(cfg.adc_bits == 2);
}

TEST_CASE("set rejects unknown keys and malformed values") {
    SystemConfig cfg;
    auto code = [&](const char* k, const char* v) {
        try {
            cfg.set(k, v);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument; // sentinel: nothing thrown
    };
    CHECK(code("nonsense", "1") == ErrorCode::Config);
    CHECK(code("devices", "ten") == ErrorCode::Config);
    CHECK(code("devices", "10x") == ErrorCode::Config);
    CHECK(code("devices", "") == ErrorCode::Config);
    CHECK(code("snr_db", "nan") == ErrorCode::Config);
    CHECK(code("snr_db", "inf") == ErrorCode::Config);
    CHECK(code("on_grid_aoa", "maybe") == ErrorCode::Config);
    CHECK(code("curvature", "sparse") == ErrorCode::Config);
    CHECK(code("majorizer", "newton") == ErrorCode::Config);
    CHECK(code("adc_bits", "3.5") == ErrorCode::Config);
}

TEST_CASE("validate enforces the invariants") {
    auto invalid = [](auto mutate) {
        SystemConfig cfg;
        mutate(cfg);
        try {
            cfg.validate();
        } catch (const Error& e) {
            return e.code() == ErrorCode::Config;
        }
        return false;
    };
    CHECK(invalid([](SystemConfig& c) { c.devices = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.antennas = 0; c.grid_size = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.grid_size = 64; }));
    CHECK(invalid([](SystemConfig& c) { c.pilot_length = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.active_ratio = -0.1; }));
    CHECK(invalid([](SystemConfig& c) { c.active_ratio = 1.5; }));
    CHECK(invalid([](SystemConfig& c) { c.clusters = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.clusters = 33; }));
    CHECK(invalid([](SystemConfig& c) { c.min_distance_km = 0.0; }));
    CHECK(invalid([](SystemConfig& c) { c.cell_radius_km = 0.01; }));
    CHECK(invalid([](SystemConfig& c) { c.adc_bits = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.adc_bits = 9; }));
    CHECK(invalid([](SystemConfig& c) { c.prior_a = 0.0; }));
    CHECK(invalid([](SystemConfig& c) { c.prior_b = -1.0; }));
    CHECK(invalid([](SystemConfig& c) { c.epsilon_rel = 0.0; }));
    CHECK(invalid([](SystemConfig& c) { c.max_iters = 0; }));
    CHECK(invalid([](SystemConfig& c) { c.tol_rel = 0.0; }));

    SystemConfig edge;
    edge.active_ratio = 0.0;
    CHECK_NOTHROW(edge.validate());
    edge.active_ratio = 1.0;
    CHECK_NOTHROW(edge.validate());
}

TEST_CASE("load parses comments and blank lines; dump round-trips") {
    std::istringstream in("# scenario\n"
                          "devices = 12   # trailing comment\n"
                          "\n"
                          "  antennas=8\n"
                          "adc_bits = inf\n"
                          "snr_db = 12.5\n");
    SystemConfig cfg;
    cfg.load(in);
    CHECK(cfg.devices == 12);
    CHECK(cfg.antennas == 8);
    CHECK(cfg.grid_size == 8);
    CHECK_FALSE(cfg.adc_bits.has_value());
    CHECK(cfg.snr_db == 12.5);

    std::ostringstream out;
    cfg.dump(out);
    SystemConfig back;
    std::istringstream again(out.str());
    back.load(again);
    std::ostringstream out2;
    back.dump(out2);
    CHECK(out.str() == out2.str());
    CHECK(back.snr_db == cfg.snr_db);
    CHECK(back.epsilon_rel == cfg.epsilon_rel);
}

TEST_CASE("load reports the offending line") {
    std::istringstream in("devices = 4\nthis line has no equals\n");
    SystemConfig cfg;
    try {
        cfg.load(in);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_file reads from disk and reports missing files as I/O errors") {
    const std::string path = "test_config_tmp.cfg";
    {
        std::ofstream f(path);
        f << "pilot_length = 77\n";
    }
    SystemConfig cfg;
    cfg.load_file(path);
    CHECK(cfg.pilot_length == 77);
    std::remove(path.c_str());

    try {
        cfg.load_file("definitely/not/here.cfg");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    }
}

TEST_CASE("enum names round-trip") {
    for (auto m : {CurvatureMode::Auto, CurvatureMode::Dense, CurvatureMode::Kronecker, CurvatureMode::Diagonal})
        CHECK(parse_curvature_mode(to_string(m)) == m);
    for (auto k : {MajorizerKind::Scalar, MajorizerKind::Jacobi})
        CHECK(parse_majorizer_kind(to_string(k)) == k);
    CHECK(format_bits(std::nullopt) == "inf");
    CHECK(format_bits(4) == "4");
}
