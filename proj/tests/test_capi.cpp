// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qadce/qadce.h"

namespace {

struct Config {
    qadce_config* p = nullptr;
    explicit Config(const char* profile = "desk") { REQUIRE(qadce_config_create_profile(profile, &p) == QADCE_OK); }
    ~Config() { qadce_config_destroy(p); }
    void set(const char* k, const char* v) { REQUIRE(qadce_config_set(p, k, v) == QADCE_OK); }
};

struct Trial {
    qadce_trial* p = nullptr;
    ~Trial() { qadce_trial_destroy(p); }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    qadce_string_free(s);
    return out;
}

void small(Config& c) {
    c.set("devices", "10");
    c.set("antennas", "4");
    c.set("pilot_length", "8");
    c.set("active_ratio", "0.3");
}

} // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(qadce_version()).size() > 0);
    CHECK(std::string(qadce_status_name(QADCE_OK)) == "ok");
    CHECK(std::string(qadce_status_name(QADCE_ERR_CONFIG)) == "config");
    CHECK(std::string(qadce_status_name(QADCE_ERR_CANCELLED)) == "cancelled");
    CHECK(std::string(qadce_status_name(static_cast<qadce_status>(1234))).size() > 0);
    qadce_string_free(nullptr);
}

TEST_CASE("config lifecycle and errors") {
    qadce_config* raw = nullptr;
    CHECK(qadce_config_create_profile("nope", &raw) == QADCE_ERR_CONFIG);
    CHECK(raw == nullptr);
    CHECK(std::string(qadce_last_error()).find("nope") != std::string::npos);
    CHECK(qadce_config_create(nullptr) == QADCE_ERR_INVALID_ARGUMENT);

    Config c;
    CHECK(qadce_config_set(c.p, "no_such_key", "1") == QADCE_ERR_CONFIG);
    CHECK(std::string(qadce_last_error()).find("no_such_key") != std::string::npos);
    CHECK(qadce_config_set(c.p, "devices", "ten") == QADCE_ERR_CONFIG);
    CHECK(qadce_config_set(c.p, nullptr, "1") == QADCE_ERR_INVALID_ARGUMENT);
    CHECK(qadce_config_load_string(c.p, "devices = 7\n# comment\nsnr_db = 3") == QADCE_OK);
    CHECK(qadce_config_load_string(c.p, "devices 7") == QADCE_ERR_CONFIG);
    CHECK(qadce_config_load_file(c.p, "/nonexistent/qadce.cfg") == QADCE_ERR_IO);

    CHECK(qadce_config_validate(c.p) == QADCE_OK);
    c.set("active_ratio", "1.5");
    CHECK(qadce_config_validate(c.p) == QADCE_ERR_CONFIG);
    c.set("active_ratio", "0.1");

    char* dump = nullptr;
    REQUIRE(qadce_config_dump(c.p, &dump) == QADCE_OK);
    const std::string text = take(dump);
    CHECK(text.find("devices = 7") != std::string::npos);

    // Dump reloads into an equal configuration.
    Config d("large");
    REQUIRE(qadce_config_load_string(d.p, text.c_str()) == QADCE_OK);
    char* again = nullptr;
    REQUIRE(qadce_config_dump(d.p, &again) == QADCE_OK);
    CHECK(take(again) == text);

    qadce_config* copy = nullptr;
    REQUIRE(qadce_config_clone(c.p, &copy) == QADCE_OK);
    char* cd = nullptr;
    REQUIRE(qadce_config_dump(copy, &cd) == QADCE_OK);
    CHECK(take(cd) == text);
    qadce_config_destroy(copy);
    qadce_config_destroy(nullptr);
}

TEST_CASE("config file loading") {
    const std::string path = "capi_test.cfg";
    {
        std::ofstream f(path);
        f << "# small\nN = 6\nM = 4\nT = 5\nadc_bits = inf\n";
    }
    Config c;
    REQUIRE(qadce_config_load_file(c.p, path.c_str()) == QADCE_OK);
    char* dump = nullptr;
    REQUIRE(qadce_config_dump(c.p, &dump) == QADCE_OK);
    const std::string text = take(dump);
    CHECK(text.find("devices = 6") != std::string::npos);
    CHECK(text.find("grid_size = 4") != std::string::npos);
    CHECK(text.find("adc_bits = inf") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("trial results and accessors") {
    Config c;
    small(c);
    c.set("objective_check", "true");
    Trial t;
    REQUIRE(qadce_trial_run(c.p, 11, &t.p) == QADCE_OK);

    qadce_trial_metrics m{};
    REQUIRE(qadce_trial_metrics_get(t.p, &m) == QADCE_OK);
    CHECK(m.devices == 10);
    CHECK(m.antennas == 4);
    CHECK(m.grid_size == 4);
    CHECK(m.pilot_length == 8);
    CHECK(m.seed == 11);
    CHECK(m.adc_bits == 3);
    CHECK(m.mse >= 0.0);
    CHECK(m.iterations >= 1);
    if (m.has_tpr)
        CHECK(m.tpr + m.fnr == doctest::Approx(1.0));

    size_t len = 0;
    REQUIRE(qadce_trial_estimate(t.p, nullptr, 0, &len) == QADCE_OK);
    CHECK(len == 2 * 4 * 10);
    std::vector<double> x(len), truth(len);
    REQUIRE(qadce_trial_estimate(t.p, x.data(), x.size(), &len) == QADCE_OK);
    REQUIRE(qadce_trial_truth(t.p, truth.data(), truth.size(), &len) == QADCE_OK);
    double se = 0.0;
    for (size_t i = 0; i < len; ++i)
        se += (x[i] - truth[i]) * (x[i] - truth[i]);
    CHECK(se / static_cast<double>(len) == doctest::Approx(m.mse).epsilon(1e-12));

    // Truncated copy still reports the full length.
    double two[2] = {0, 0};
    REQUIRE(qadce_trial_estimate(t.p, two, 2, &len) == QADCE_OK);
    CHECK(len == x.size());
    CHECK(two[0] == x[0]);
    CHECK(qadce_trial_estimate(t.p, nullptr, 3, &len) == QADCE_ERR_INVALID_ARGUMENT);
    CHECK(qadce_trial_estimate(t.p, two, 2, nullptr) == QADCE_ERR_INVALID_ARGUMENT);

    std::vector<uint8_t> det(10), act(10);
    REQUIRE(qadce_trial_activity(t.p, det.data(), act.data(), 10, &len) == QADCE_OK);
    CHECK(len == 10);
    int active = 0;
    for (auto a : act)
        active += a;
    CHECK(active == m.active);

    std::vector<double> llr(10);
    double thr = 0.0;
    REQUIRE(qadce_trial_llr(t.p, llr.data(), llr.size(), &len, &thr) == QADCE_OK);
    for (size_t n = 0; n < 10; ++n)
        CHECK((det[n] != 0) == (llr[n] > thr));

    REQUIRE(qadce_trial_objective_trace(t.p, nullptr, 0, &len) == QADCE_OK);
    CHECK(len == static_cast<size_t>(m.iterations) + 1);
    std::vector<double> obj(len);
    REQUIRE(qadce_trial_objective_trace(t.p, obj.data(), obj.size(), &len) == QADCE_OK);
    for (size_t j = 1; j < obj.size(); ++j)
        CHECK(obj[j] <= obj[j - 1] + 1e-9 * std::abs(obj[j - 1]));

    char* trace = nullptr;
    REQUIRE(qadce_trial_trace_csv(t.p, &trace) == QADCE_OK);
    const std::string tcsv = take(trace);
    CHECK(tcsv.rfind("iter,objective,change\n0,", 0) == 0);

    char* header = nullptr;
    char* row = nullptr;
    REQUIRE(qadce_trial_csv_header(0, &header) == QADCE_OK);
    REQUIRE(qadce_trial_csv_row(t.p, 0, &row) == QADCE_OK);
    const std::string h = take(header), r = take(row);
    CHECK(std::count(h.begin(), h.end(), ',') == std::count(r.begin(), r.end(), ','));
    CHECK(r.rfind("11,8,", 0) == 0);
    REQUIRE(qadce_trial_csv_header(1, &header) == QADCE_OK);
    CHECK(take(header).find("wall_time_s") != std::string::npos);
}

TEST_CASE("trials are reproducible and unquantized runs report -1 bits") {
    Config c;
    small(c);
    c.set("adc_bits", "inf");
    Trial a, b;
    REQUIRE(qadce_trial_run(c.p, 4, &a.p) == QADCE_OK);
    REQUIRE(qadce_trial_run(c.p, 4, &b.p) == QADCE_OK);
    char* ra = nullptr;
    char* rb = nullptr;
    REQUIRE(qadce_trial_csv_row(a.p, 0, &ra) == QADCE_OK);
    REQUIRE(qadce_trial_csv_row(b.p, 0, &rb) == QADCE_OK);
    CHECK(take(ra) == take(rb));
    qadce_trial_metrics m{};
    REQUIRE(qadce_trial_metrics_get(a.p, &m) == QADCE_OK);
    CHECK(m.adc_bits == -1);
}

TEST_CASE("invalid trial configuration") {
    Config c;
    c.set("pilot_length", "0");
    Trial t;
    CHECK(qadce_trial_run(c.p, 1, &t.p) == QADCE_ERR_CONFIG);
    CHECK(t.p == nullptr);
    CHECK(std::string(qadce_last_error()).size() > 0);
    CHECK(qadce_trial_run(nullptr, 1, &t.p) == QADCE_ERR_INVALID_ARGUMENT);
    CHECK(qadce_trial_metrics_get(nullptr, nullptr) == QADCE_ERR_INVALID_ARGUMENT);
}

TEST_CASE("last error is per thread") {
    Config c;
    CHECK(qadce_config_set(c.p, "bogus_main", "1") == QADCE_ERR_CONFIG);
    std::string other;
    std::thread th([&] {
        Config d;
        (void)qadce_config_set(d.p, "bogus_worker", "1");
        other = qadce_last_error();
    });
    th.join();
    CHECK(other.find("bogus_worker") != std::string::npos);
    CHECK(std::string(qadce_last_error()).find("bogus_main") != std::string::npos);
}

namespace {

struct Rows {
    std::vector<std::string> rows;
    int stop_after = -1;
};

int collect(const char* row, void* user) {
    auto* r = static_cast<Rows*>(user);
    r->rows.emplace_back(row);
    return r->stop_after >= 0 && static_cast<int>(r->rows.size()) >= r->stop_after;
}

} // namespace

TEST_CASE("sweep: streaming, determinism and cancellation") {
    Config c;
    small(c);
    qadce_sweep_options opts{"pilot_length", "6,10", 3, 1, 2};
    Rows rows;
    char* csv = nullptr;
    REQUIRE(qadce_sweep_run(c.p, &opts, collect, &rows, &csv) == QADCE_OK);
    const std::string first = take(csv);
    REQUIRE(rows.rows.size() == 3);
    CHECK(rows.rows[0].rfind("axis,value,", 0) == 0);
    CHECK(rows.rows[1].rfind("pilot_length,6,", 0) == 0);

    REQUIRE(qadce_sweep_run(c.p, &opts, nullptr, nullptr, &csv) == QADCE_OK);
    CHECK(take(csv) == first);

    Rows stop;
    stop.stop_after = 2;
    CHECK(qadce_sweep_run(c.p, &opts, collect, &stop, &csv) == QADCE_ERR_CANCELLED);
    const std::string partial = take(csv);
    CHECK(stop.rows.size() == 2);
    CHECK(first.rfind(partial, 0) == 0);

    qadce_sweep_options bad{"bogus", "1", 1, 1, 1};
    CHECK(qadce_sweep_run(c.p, &bad, nullptr, nullptr, nullptr) == QADCE_ERR_CONFIG);
    qadce_sweep_options bad_values{"snr_db", "1,x", 1, 1, 1};
    CHECK(qadce_sweep_run(c.p, &bad_values, nullptr, nullptr, nullptr) == QADCE_ERR_CONFIG);
    CHECK(qadce_sweep_run(c.p, nullptr, nullptr, nullptr, nullptr) == QADCE_ERR_INVALID_ARGUMENT);
}

TEST_CASE("quantizer report") {
    const int bits[] = {1, 2};
    char* json = nullptr;
    REQUIRE(qadce_quantizer_report(bits, 2, 1.0, &json) == QADCE_OK);
    const auto j = nlohmann::json::parse(take(json));
    REQUIRE(j.size() == 2);
    CHECK(j[0]["bits"] == 1);
    CHECK(j[0]["bussgang_gain"].get<double>() == doctest::Approx(2.0 / M_PI).epsilon(1e-9));
    CHECK(j[1]["distortion"].get<double>() == doctest::Approx(0.1175).epsilon(2e-3));
    const auto t = j[1]["thresholds"].get<std::vector<double>>();
    CHECK(t[2] == doctest::Approx(0.9816).epsilon(1e-3));

    CHECK(qadce_quantizer_report(bits, 2, 0.0, &json) == QADCE_ERR_INVALID_ARGUMENT);
    const int zero[] = {0};
    CHECK(qadce_quantizer_report(zero, 1, 1.0, &json) == QADCE_ERR_INVALID_ARGUMENT);
    CHECK(qadce_quantizer_report(nullptr, 1, 1.0, &json) == QADCE_ERR_INVALID_ARGUMENT);
}

TEST_CASE("selftest through the C API") {
    char* report = nullptr;
    int ok = 0;
    REQUIRE(qadce_selftest(0, 3, &report, &ok) == QADCE_OK);
    const auto j = nlohmann::json::parse(take(report));
    CHECK(ok == 1);
    CHECK(j.size() == 6);
    for (const auto& c : j)
        CHECK(c["passed"].get<bool>());
}
