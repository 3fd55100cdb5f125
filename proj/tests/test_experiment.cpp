#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

#include "oracles.hpp"
#include "qadce/experiment.hpp"

using namespace qadce;

namespace {

SystemConfig tiny() {
    SystemConfig cfg;
    cfg.devices = 12;
    cfg.antennas = cfg.grid_size = 8;
    cfg.pilot_length = 12;
    cfg.active_ratio = 0.25;
    cfg.adc_bits = 2;
    cfg.snr_db = 10.0;
    return cfg;
}

int fields(const std::string& line) { return static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1; }

bool same(const TrialRecord& a, const TrialRecord& b) {
    return trial_csv_row(a) == trial_csv_row(b) && a.active_component_power == b.active_component_power;
}

} // namespace

TEST_CASE("prior component variance") {
    SystemConfig cfg = tiny();
    CHECK(prior_component_variance(cfg) == doctest::Approx(0.25 / 16.0));
}

TEST_CASE("trial is deterministic in (config, seed) and seeds differ") {
    const SystemConfig cfg = tiny();
    const TrialOutcome a = run_trial_full(cfg, 5);
    const TrialOutcome b = run_trial_full(cfg, 5);
    CHECK(a.state.x == b.state.x);
    CHECK(trial_csv_row(a.record) == trial_csv_row(b.record));
    const TrialOutcome c = run_trial_full(cfg, 6);
    CHECK(a.measurement.y != c.measurement.y);
}

TEST_CASE("trial pipeline equals composing the modules by hand") {
    const SystemConfig cfg = tiny();
    const std::uint64_t seed = 9;
    const TrialOutcome o = run_trial_full(cfg, seed);

    Rng rng = make_rng(seed);
    const MatrixXc grid = build_grid(8, 8);
    const Scene scene = generate_scene(cfg, grid, rng);
    const PilotMatrix pilots = generate_pilots(12, 12, rng);
    const Observation obs = synthesize(scene, pilots, grid, rng);
    const double pv = prior_component_variance(cfg);
    const ScalarQuantizer q = lloyd_max_design(2, 1.0).scaled(
        design_input_std(output_std(obs.measurement.phi.row_sq_norms(), pv, scene.noise_variance)));
    const VectorXd r = quantize_real(q, obs.measurement.y);
    const EffectiveLinearModel model = build_effective_model(obs.measurement.phi, q, scene.noise_variance, pv);
    const PriorHyper h = PriorHyper::from_config(cfg);
    const DeviceLayout l{8, 12};
    const SolverState st =
        solve(model, precompute(model, r, cfg.curvature, cfg.majorizer), r, l, h, {cfg.max_iters, cfg.tol_rel, false});
    const DetectionResult d = detect(st.x, l, h);

    CHECK(o.r_obs == r);
    CHECK((o.state.x - st.x).norm() <= 1e-12 * std::max(st.x.norm(), 1e-300));
    CHECK(o.detection.s_hat == d.s_hat);
    CHECK(o.record.metrics.mse == doctest::Approx(mse(st.x, obs.measurement.x_true)).epsilon(1e-9));
    CHECK(o.record.active == scene.active_count());
    const DetectionRates rates = detection_rates(d.s_hat, scene.activity);
    if (rates.tpr)
        CHECK(*o.record.metrics.rates.tpr + *o.record.metrics.rates.fnr == doctest::Approx(1.0));
    CHECK(o.record.iterations == st.iter);
}

TEST_CASE("unquantized trial keeps the raw observation") {
    SystemConfig cfg = tiny();
    cfg.adc_bits.reset();
    const TrialOutcome o = run_trial_full(cfg, 3);
    CHECK(o.quantizer.is_identity());
    CHECK(o.r_obs == o.measurement.y);
    CHECK(trial_csv_row(o.record).find(",inf,") != std::string::npos);
}

TEST_CASE("estimation error falls with SNR") {
    SystemConfig cfg = tiny();
    cfg.adc_bits.reset();
    double low = 0.0, high = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        cfg.snr_db = 0.0;
        low += run_trial(cfg, s).metrics.mse;
        cfg.snr_db = 30.0;
        high += run_trial(cfg, s).metrics.mse;
    }
    CHECK(high < low);
}

TEST_CASE("invalid configuration is reported with the Config code") {
    SystemConfig cfg = tiny();
    cfg.pilot_length = 0;
    try {
        run_trial(cfg, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
    }
}

TEST_CASE("axis handling") {
    CHECK(parse_sweep_axis("snr_db") == SweepAxis::SnrDb);
    CHECK(std::string(to_string(SweepAxis::AdcBits)) == "adc_bits");
    CHECK_THROWS_AS(parse_sweep_axis("bogus"), Error);

    SystemConfig cfg = tiny();
    apply_axis(cfg, SweepAxis::PilotLength, 70.0);
    CHECK(cfg.pilot_length == 70);
    apply_axis(cfg, SweepAxis::SnrDb, -5.0);
    CHECK(cfg.snr_db == -5.0);
    apply_axis(cfg, SweepAxis::AdcBits, std::numeric_limits<double>::infinity());
    CHECK_FALSE(cfg.adc_bits.has_value());
    apply_axis(cfg, SweepAxis::AdcBits, 1.0);
    CHECK(cfg.adc_bits == 1);
    CHECK_THROWS_AS(apply_axis(cfg, SweepAxis::PilotLength, 2.5), Error);
    CHECK_THROWS_AS(apply_axis(cfg, SweepAxis::PilotLength, 0.0), Error);
    CHECK_THROWS_AS(apply_axis(cfg, SweepAxis::AdcBits, 1.5), Error);
    CHECK_THROWS_AS(apply_axis(cfg, SweepAxis::SnrDb, std::nan("")), Error);
}

TEST_CASE("value lists") {
    const std::vector<double> v = parse_value_list("40, 70,100");
    CHECK(v == std::vector<double>{40.0, 70.0, 100.0});
    const std::vector<double> b = parse_value_list("1,3,inf");
    CHECK(std::isinf(b[2]));
    CHECK(parse_value_list("-5") == std::vector<double>{-5.0});
    CHECK_THROWS_AS(parse_value_list("1,,2"), Error);
    CHECK_THROWS_AS(parse_value_list("abc"), Error);
    CHECK_THROWS_AS(parse_value_list(""), Error);
}

TEST_CASE("aggregate summaries") {
    std::vector<TrialRecord> recs(3);
    recs[0].metrics.mse = 1.0;
    recs[1].metrics.mse = 2.0;
    recs[2].metrics.mse = 6.0;
    recs[0].metrics.rates.tpr = 1.0;
    recs[2].metrics.rates.tpr = 0.5;
    const SweepPoint p = aggregate(7.0, recs);
    CHECK(p.value == 7.0);
    CHECK(p.trials == 3);
    CHECK(p.mse.mean == doctest::Approx(3.0));
    CHECK(p.mse.std_error == doctest::Approx(std::sqrt(7.0 / 3.0)));
    CHECK(p.tpr.count == 2);
    CHECK(p.tpr.mean == doctest::Approx(0.75));
    CHECK(p.fpr.count == 0);

    SweepSpec spec;
    const std::string row = sweep_csv_row(spec, p);
    CHECK(fields(row) == fields(sweep_csv_header()));
    CHECK(row.find("pilot_length,7,3,0.75,,,") == 0);
}

TEST_CASE("CSV formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(fields(trial_csv_header()) == 13);
    CHECK(fields(trial_csv_header(true)) == 14);
    const TrialRecord r = run_trial(tiny(), 2);
    CHECK(fields(trial_csv_row(r)) == 13);
    CHECK(fields(trial_csv_row(r, true)) == 14);
}

TEST_CASE("run_point does not depend on the thread count") {
    SweepSpec spec;
    spec.base = tiny();
    spec.trials_per_point = 6;
    spec.seed_base = 100;
    spec.threads = 1;
    const auto serial = run_point(spec, 12.0);
    spec.threads = 3;
    const auto parallel = run_point(spec, 12.0);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(same(serial[i], parallel[i]));
        CHECK(serial[i].metrics.seed == 100 + i);
    }
}

TEST_CASE("sweep is reproducible and can be stopped from the row callback") {
    SweepSpec spec;
    spec.base = tiny();
    spec.axis = SweepAxis::SnrDb;
    spec.values = {0.0, 10.0, 20.0};
    spec.trials_per_point = 3;
    spec.threads = 2;
    std::vector<std::string> rows;
    const std::string a = run_sweep(spec, [&](const std::string& r) {
        rows.push_back(r);
        return true;
    });
    CHECK(rows.size() == 4);
    CHECK(rows[0] == sweep_csv_header());
    CHECK(a == run_sweep(spec));

    int seen = 0;
    const std::string partial = run_sweep(spec, [&](const std::string&) { return ++seen < 2; });
    CHECK(seen == 2);
    CHECK(std::count(partial.begin(), partial.end(), '\n') == 2);
    CHECK(a.rfind(partial, 0) == 0);

    spec.values.clear();
    CHECK_THROWS_AS(run_sweep(spec), Error);
    spec.values = {0.0};
    spec.trials_per_point = 0;
    CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("QADCE_THREADS picks the worker count when unspecified") {
    SweepSpec spec;
    spec.base = tiny();
    spec.trials_per_point = 4;
    spec.threads = 0;
    ::setenv("QADCE_THREADS", "2", 1);
    const auto env = run_point(spec, 12.0);
    ::unsetenv("QADCE_THREADS");
    spec.threads = 1;
    const auto one = run_point(spec, 12.0);
    for (std::size_t i = 0; i < env.size(); ++i)
        CHECK(same(env[i], one[i]));
}
