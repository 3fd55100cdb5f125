#include "qadce/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace qadce {

const ScalarQuantizer& unit_lloyd_max(int bits) {
    static std::mutex mutex;
    static std::map<int, ScalarQuantizer> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(bits);
    if (it == cache.end())
        it = cache.emplace(bits, lloyd_max_design(bits, 1.0)).first;
    return it->second;
}

double prior_component_variance(const SystemConfig& cfg) {
    return cfg.active_ratio / (2.0 * static_cast<double>(cfg.grid_size));
}

TrialOutcome run_trial_full(const SystemConfig& cfg, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    TrialOutcome out;
    try {
        Rng rng = make_rng(seed);
        const MatrixXc grid = build_grid(cfg.antennas, cfg.grid_size);
        out.scene = generate_scene(cfg, grid, rng);
        const PilotMatrix pilots = generate_pilots(cfg.devices, cfg.pilot_length, rng);
        Observation obs = synthesize(out.scene, pilots, grid, rng);
        out.measurement = std::move(obs.measurement);

        const double prior_var = prior_component_variance(cfg);
        const double sigma_v2 = out.scene.noise_variance;
        if (cfg.adc_bits) {
            const VectorXd sigma_y = output_std(out.measurement.phi.row_sq_norms(), prior_var, sigma_v2);
            out.quantizer = unit_lloyd_max(*cfg.adc_bits).scaled(design_input_std(sigma_y));
        }
        out.r_obs = quantize_real(out.quantizer, out.measurement.y);

        const EffectiveLinearModel model = build_effective_model(out.measurement.phi, out.quantizer, sigma_v2, prior_var);
        const SolverCoefficients coeffs = precompute(model, out.r_obs, cfg.curvature, cfg.majorizer);
        const PriorHyper hyper = PriorHyper::from_config(cfg);
        const DeviceLayout layout{cfg.grid_size, cfg.devices};
        const SolverOptions opts{cfg.max_iters, cfg.tol_rel, cfg.objective_check};
        out.state = solve(model, coeffs, out.r_obs, layout, hyper, opts);
        out.detection = detect(out.state.x, layout, hyper);
        out.channel_estimate = reconstruct_channels(out.state.x, out.detection.s_hat, grid);
    } catch (const Error& e) {
        throw Error(e.code(), "trial seed=" + std::to_string(seed) + ": " + e.what());
    }

    TrialRecord& rec = out.record;
    rec.metrics.mse = mse(out.state.x, out.measurement.x_true);
    rec.metrics.rates = detection_rates(out.detection.s_hat, out.scene.activity);
    rec.metrics.pilot_length = cfg.pilot_length;
    rec.metrics.snr_db = cfg.snr_db;
    rec.metrics.adc_bits = cfg.adc_bits;
    rec.metrics.seed = seed;
    rec.devices = cfg.devices;
    rec.antennas = cfg.antennas;
    rec.active = out.scene.active_count();
    rec.iterations = out.state.iter;
    rec.converged = out.state.converged;
    if (rec.active > 0)
        rec.active_component_power = out.measurement.x_true.squaredNorm() /
                                     (2.0 * static_cast<double>(cfg.grid_size) * static_cast<double>(rec.active));
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

TrialRecord run_trial(const SystemConfig& cfg, std::uint64_t seed) { return run_trial_full(cfg, seed).record; }

const char* to_string(SweepAxis axis) noexcept {
    switch (axis) {
    case SweepAxis::PilotLength: return "pilot_length";
    case SweepAxis::SnrDb: return "snr_db";
    case SweepAxis::AdcBits: return "adc_bits";
    }
    return "pilot_length";
}

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "pilot_length") return SweepAxis::PilotLength;
    if (text == "snr_db") return SweepAxis::SnrDb;
    if (text == "adc_bits") return SweepAxis::AdcBits;
    fail(ErrorCode::Config, "unknown sweep axis '" + std::string(text) + "'");
}

void apply_axis(SystemConfig& cfg, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::PilotLength:
        require(value >= 1.0 && std::floor(value) == value, ErrorCode::Config, "pilot_length values must be integers >= 1");
        cfg.pilot_length = static_cast<Index>(value);
        break;
    case SweepAxis::SnrDb:
        require(std::isfinite(value), ErrorCode::Config, "snr_db values must be finite");
        cfg.snr_db = value;
        break;
    case SweepAxis::AdcBits:
        if (std::isinf(value) && value > 0) {
            cfg.adc_bits.reset();
        } else {
            require(std::floor(value) == value, ErrorCode::Config, "adc_bits values must be integers or inf");
            cfg.adc_bits = static_cast<int>(value);
        }
        break;
    }
}

void SweepSpec::validate() const {
    require(!values.empty(), ErrorCode::Config, "sweep: no axis values");
    require(trials_per_point >= 1, ErrorCode::Config, "sweep: trials_per_point must be >= 1");
    for (double v : values) {
        SystemConfig cfg = base;
        apply_axis(cfg, axis, v);
        cfg.validate();
    }
}

std::string format_number(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

int resolve_threads(int requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("QADCE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

MetricSummary summarize(const std::vector<double>& v) {
    MetricSummary s;
    s.count = static_cast<int>(v.size());
    if (v.empty())
        return s;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - s.mean) * (x - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return s;
}

} // namespace

std::string trial_csv_header(bool with_timing) {
    std::string h = "seed,pilot_length,snr_db,adc_bits,devices,antennas,active,mse,tpr,fnr,fpr,iterations,converged";
    if (with_timing)
        h += ",wall_time_s";
    return h;
}

std::string trial_csv_row(const TrialRecord& rec, bool with_timing) {
    std::ostringstream os;
    const auto& m = rec.metrics;
    os << m.seed << ',' << m.pilot_length << ',' << format_number(m.snr_db) << ',' << format_bits(m.adc_bits) << ','
       << rec.devices << ',' << rec.antennas << ',' << rec.active << ',' << format_number(m.mse) << ','
       << format_optional(m.rates.tpr) << ',' << format_optional(m.rates.fnr) << ',' << format_optional(m.rates.fpr)
       << ',' << rec.iterations << ',' << (rec.converged ? 1 : 0);
    if (with_timing)
        os << ',' << format_number(rec.wall_time_s);
    return os.str();
}

std::string sweep_csv_header() {
    return "axis,value,mse_mean,tpr_mean,fnr_mean,fpr_mean,mse_se,tpr_se,fnr_se,fpr_se,trials,seed_base";
}

std::string sweep_csv_row(const SweepSpec& spec, const SweepPoint& p) {
    auto mean = [](const MetricSummary& s) { return s.count ? format_number(s.mean) : std::string(); };
    auto se = [](const MetricSummary& s) { return s.count ? format_number(s.std_error) : std::string(); };
    std::ostringstream os;
    os << to_string(spec.axis) << ',' << format_number(p.value) << ',' << mean(p.mse) << ',' << mean(p.tpr) << ','
       << mean(p.fnr) << ',' << mean(p.fpr) << ',' << se(p.mse) << ',' << se(p.tpr) << ',' << se(p.fnr) << ','
       << se(p.fpr) << ',' << p.trials << ',' << spec.seed_base;
    return os.str();
}

SweepPoint aggregate(double value, const std::vector<TrialRecord>& records) {
    std::vector<double> mse_v, tpr_v, fnr_v, fpr_v;
    for (const auto& r : records) {
        mse_v.push_back(r.metrics.mse);
        if (r.metrics.rates.tpr) tpr_v.push_back(*r.metrics.rates.tpr);
        if (r.metrics.rates.fnr) fnr_v.push_back(*r.metrics.rates.fnr);
        if (r.metrics.rates.fpr) fpr_v.push_back(*r.metrics.rates.fpr);
    }
    SweepPoint p;
    p.value = value;
    p.mse = summarize(mse_v);
    p.tpr = summarize(tpr_v);
    p.fnr = summarize(fnr_v);
    p.fpr = summarize(fpr_v);
    p.trials = static_cast<int>(records.size());
    return p;
}

std::vector<TrialRecord> run_point(const SweepSpec& spec, double value) {
    SystemConfig cfg = spec.base;
    apply_axis(cfg, spec.axis, value);
    cfg.validate();

    const int n = spec.trials_per_point;
    std::vector<TrialRecord> records(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                records[static_cast<std::size_t>(i)] = run_trial(cfg, spec.seed_base + static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::min(resolve_threads(spec.threads), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return records;
}

std::string run_sweep(const SweepSpec& spec, const RowCallback& on_row) {
    spec.validate();
    std::string csv = sweep_csv_header() + "\n";
    if (on_row && !on_row(sweep_csv_header()))
        return csv;
    for (double v : spec.values) {
        const std::string row = sweep_csv_row(spec, aggregate(v, run_point(spec, v)));
        csv += row + "\n";
        if (on_row && !on_row(row))
            break;
    }
    return csv;
}

std::vector<double> parse_value_list(std::string_view text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        std::string item(text.substr(pos, comma - pos));
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item == "inf") {
            out.push_back(std::numeric_limits<double>::infinity());
        } else {
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            require(!item.empty() && end == item.c_str() + item.size(), ErrorCode::Config,
                    "bad value list entry '" + item + "'");
            out.push_back(v);
        }
        pos = comma + 1;
    }
    return out;
}

} // namespace qadce
