#include "qadce/qadce.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qadce/bussgang.hpp"
#include "qadce/config.hpp"
#include "qadce/experiment.hpp"
#include "qadce/mm_solver.hpp"
#include "qadce/quantizer.hpp"
#include "qadce/selftest.hpp"

struct qadce_config {
    qadce::SystemConfig cfg;
};

struct qadce_trial {
    qadce::TrialOutcome outcome;
};

namespace {

thread_local std::string last_error;

qadce_status status_for(qadce::ErrorCode code) {
    switch (code) {
    case qadce::ErrorCode::InvalidArgument: return QADCE_ERR_INVALID_ARGUMENT;
    case qadce::ErrorCode::DimensionMismatch: return QADCE_ERR_DIMENSION_MISMATCH;
    case qadce::ErrorCode::Config: return QADCE_ERR_CONFIG;
    case qadce::ErrorCode::NotConverged: return QADCE_ERR_NOT_CONVERGED;
    case qadce::ErrorCode::Numeric: return QADCE_ERR_NUMERIC;
    case qadce::ErrorCode::Io: return QADCE_ERR_IO;
    }
    return QADCE_ERR_INTERNAL;
}

qadce_status set_error(qadce_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

// Runs body, translating exceptions into a status and the thread's message.
template <class F>
qadce_status guarded(F&& body) {
    try {
        return body();
    } catch (const qadce::Error& e) {
        return set_error(status_for(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(QADCE_ERR_OUT_OF_MEMORY, "out of memory");
    } catch (const std::exception& e) {
        return set_error(QADCE_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(QADCE_ERR_INTERNAL, "unknown exception");
    }
}

qadce_status null_argument(const char* what) {
    return set_error(QADCE_ERR_INVALID_ARGUMENT, std::string(what) + " must not be null");
}

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class T, class Source>
qadce_status copy_out(const Source& src, T* buf, std::size_t capacity, std::size_t* length) {
    if (!length)
        return null_argument("length");
    if (capacity > 0 && !buf)
        return null_argument("buf");
    const std::size_t n = static_cast<std::size_t>(src.size());
    *length = n;
    for (std::size_t i = 0; i < std::min(n, capacity); ++i)
        buf[i] = static_cast<T>(src[static_cast<decltype(src.size())>(i)]);
    return QADCE_OK;
}

} // namespace

extern "C" {

const char* qadce_version(void) { return "0.1.0"; }

const char* qadce_status_name(qadce_status status) {
    switch (status) {
    case QADCE_OK: return "ok";
    case QADCE_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case QADCE_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case QADCE_ERR_CONFIG: return "config";
    case QADCE_ERR_NOT_CONVERGED: return "not_converged";
    case QADCE_ERR_NUMERIC: return "numeric";
    case QADCE_ERR_IO: return "io";
    case QADCE_ERR_CANCELLED: return "cancelled";
    case QADCE_ERR_OUT_OF_MEMORY: return "out_of_memory";
    case QADCE_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* qadce_last_error(void) { return last_error.c_str(); }

void qadce_string_free(char* s) { std::free(s); }

qadce_status qadce_config_create(qadce_config** out) { return qadce_config_create_profile("desk", out); }

qadce_status qadce_config_create_profile(const char* profile, qadce_config** out) {
    if (!out)
        return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        const std::string name = profile ? profile : "desk";
        if (name == "desk")
            *out = new qadce_config{qadce::SystemConfig::desk_profile()};
        else if (name == "large")
            *out = new qadce_config{qadce::SystemConfig::large_profile()};
        else
            return set_error(QADCE_ERR_CONFIG, "unknown profile '" + name + "'");
        return QADCE_OK;
    });
}

qadce_status qadce_config_clone(const qadce_config* cfg, qadce_config** out) {
    if (!cfg)
        return null_argument("cfg");
    if (!out)
        return null_argument("out");
    return guarded([&] {
        *out = new qadce_config{cfg->cfg};
        return QADCE_OK;
    });
}

void qadce_config_destroy(qadce_config* cfg) { delete cfg; }

qadce_status qadce_config_load_file(qadce_config* cfg, const char* path) {
    if (!cfg)
        return null_argument("cfg");
    if (!path)
        return null_argument("path");
    return guarded([&] {
        qadce::SystemConfig next = cfg->cfg;
        next.load_file(path);
        cfg->cfg = next;
        return QADCE_OK;
    });
}

qadce_status qadce_config_load_string(qadce_config* cfg, const char* text) {
    if (!cfg)
        return null_argument("cfg");
    if (!text)
        return null_argument("text");
    return guarded([&] {
        qadce::SystemConfig next = cfg->cfg;
        std::istringstream in(text);
        next.load(in);
        cfg->cfg = next;
        return QADCE_OK;
    });
}

qadce_status qadce_config_set(qadce_config* cfg, const char* key, const char* value) {
    if (!cfg)
        return null_argument("cfg");
    if (!key)
        return null_argument("key");
    if (!value)
        return null_argument("value");
    return guarded([&] {
        cfg->cfg.set(key, value);
        return QADCE_OK;
    });
}

qadce_status qadce_config_validate(const qadce_config* cfg) {
    if (!cfg)
        return null_argument("cfg");
    return guarded([&] {
        cfg->cfg.validate();
        return QADCE_OK;
    });
}

qadce_status qadce_config_dump(const qadce_config* cfg, char** out) {
    if (!cfg)
        return null_argument("cfg");
    if (!out)
        return null_argument("out");
    return guarded([&] {
        std::ostringstream os;
        cfg->cfg.dump(os);
        *out = duplicate(os.str());
        return QADCE_OK;
    });
}

qadce_status qadce_trial_run(const qadce_config* cfg, uint64_t seed, qadce_trial** out) {
    if (!cfg)
        return null_argument("cfg");
    if (!out)
        return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        auto* t = new qadce_trial;
        try {
            t->outcome = qadce::run_trial_full(cfg->cfg, seed);
        } catch (...) {
            delete t;
            throw;
        }
        *out = t;
        return QADCE_OK;
    });
}

void qadce_trial_destroy(qadce_trial* trial) { delete trial; }

qadce_status qadce_trial_metrics_get(const qadce_trial* trial, qadce_trial_metrics* out) {
    if (!trial)
        return null_argument("trial");
    if (!out)
        return null_argument("out");
    const qadce::TrialRecord& r = trial->outcome.record;
    const auto& m = r.metrics;
    *out = qadce_trial_metrics{};
    out->mse = m.mse;
    out->has_tpr = m.rates.tpr.has_value();
    out->has_fnr = m.rates.fnr.has_value();
    out->has_fpr = m.rates.fpr.has_value();
    out->tpr = m.rates.tpr.value_or(0.0);
    out->fnr = m.rates.fnr.value_or(0.0);
    out->fpr = m.rates.fpr.value_or(0.0);
    out->devices = r.devices;
    out->antennas = r.antennas;
    out->grid_size = trial->outcome.scene.angular_channel.rows();
    out->pilot_length = m.pilot_length;
    out->active = r.active;
    out->snr_db = m.snr_db;
    out->adc_bits = m.adc_bits ? *m.adc_bits : -1;
    out->seed = m.seed;
    out->iterations = r.iterations;
    out->converged = r.converged ? 1 : 0;
    out->active_component_power = r.active_component_power;
    out->wall_time_s = r.wall_time_s;
    return QADCE_OK;
}

qadce_status qadce_trial_csv_header(int with_timing, char** out) {
    if (!out)
        return null_argument("out");
    return guarded([&] {
        *out = duplicate(qadce::trial_csv_header(with_timing != 0));
        return QADCE_OK;
    });
}

qadce_status qadce_trial_csv_row(const qadce_trial* trial, int with_timing, char** out) {
    if (!trial)
        return null_argument("trial");
    if (!out)
        return null_argument("out");
    return guarded([&] {
        *out = duplicate(qadce::trial_csv_row(trial->outcome.record, with_timing != 0));
        return QADCE_OK;
    });
}

qadce_status qadce_trial_trace_csv(const qadce_trial* trial, char** out) {
    if (!trial)
        return null_argument("trial");
    if (!out)
        return null_argument("out");
    return guarded([&] {
        std::ostringstream os;
        qadce::write_trace_csv(os, trial->outcome.state);
        *out = duplicate(os.str());
        return QADCE_OK;
    });
}

qadce_status qadce_trial_estimate(const qadce_trial* trial, double* buf, size_t capacity, size_t* length) {
    if (!trial)
        return null_argument("trial");
    return copy_out(trial->outcome.state.x, buf, capacity, length);
}

qadce_status qadce_trial_truth(const qadce_trial* trial, double* buf, size_t capacity, size_t* length) {
    if (!trial)
        return null_argument("trial");
    return copy_out(trial->outcome.measurement.x_true, buf, capacity, length);
}

qadce_status qadce_trial_activity(const qadce_trial* trial, uint8_t* detected, uint8_t* truth, size_t capacity,
                                  size_t* length) {
    if (!trial)
        return null_argument("trial");
    if (capacity > 0 && (!detected || !truth))
        return null_argument("detected/truth");
    const qadce_status s = copy_out(trial->outcome.detection.s_hat, detected, capacity, length);
    if (s != QADCE_OK)
        return s;
    return copy_out(trial->outcome.scene.activity, truth, capacity, length);
}

qadce_status qadce_trial_llr(const qadce_trial* trial, double* buf, size_t capacity, size_t* length,
                             double* threshold) {
    if (!trial)
        return null_argument("trial");
    if (threshold)
        *threshold = trial->outcome.detection.threshold;
    return copy_out(trial->outcome.detection.llr, buf, capacity, length);
}

qadce_status qadce_trial_objective_trace(const qadce_trial* trial, double* buf, size_t capacity, size_t* length) {
    if (!trial)
        return null_argument("trial");
    return copy_out(trial->outcome.state.obj_trace, buf, capacity, length);
}

qadce_status qadce_sweep_run(const qadce_config* base, const qadce_sweep_options* opts, qadce_row_callback on_row,
                             void* user, char** csv) {
    if (!base)
        return null_argument("base");
    if (!opts)
        return null_argument("opts");
    if (!opts->axis)
        return null_argument("opts->axis");
    if (!opts->values)
        return null_argument("opts->values");
    if (csv)
        *csv = nullptr;
    return guarded([&] {
        qadce::SweepSpec spec;
        spec.base = base->cfg;
        spec.axis = qadce::parse_sweep_axis(opts->axis);
        spec.values = qadce::parse_value_list(opts->values);
        spec.trials_per_point = opts->trials_per_point;
        spec.seed_base = opts->seed_base;
        spec.threads = opts->threads;
        bool cancelled = false;
        qadce::RowCallback cb;
        if (on_row)
            cb = [&](const std::string& row) {
                cancelled = on_row(row.c_str(), user) != 0;
                return !cancelled;
            };
        const std::string out = qadce::run_sweep(spec, cb);
        if (csv)
            *csv = duplicate(out);
        if (cancelled)
            return set_error(QADCE_ERR_CANCELLED, "sweep stopped by callback");
        return QADCE_OK;
    });
}

qadce_status qadce_quantizer_report(const int* bits, size_t count, double input_std, char** json) {
    if (!json)
        return null_argument("json");
    if (count > 0 && !bits)
        return null_argument("bits");
    *json = nullptr;
    return guarded([&] {
        qadce::require(input_std > 0.0, qadce::ErrorCode::InvalidArgument, "input_std must be > 0");
        nlohmann::json report = nlohmann::json::array();
        for (std::size_t i = 0; i < count; ++i) {
            const qadce::ScalarQuantizer q = qadce::lloyd_max_design(bits[i], input_std);
            const double k = qadce::bussgang_gain(q, input_std);
            const double r = qadce::residual_variance(q, input_std);
            const double var = input_std * input_std;
            report.push_back({{"bits", bits[i]},
                              {"input_std", input_std},
                              {"thresholds", q.thresholds()},
                              {"levels", q.levels()},
                              {"bussgang_gain", k},
                              {"residual_variance", r},
                              {"distortion", r + var * (1.0 - k) * (1.0 - k)}});
        }
        *json = duplicate(report.dump(2));
        return QADCE_OK;
    });
}

qadce_status qadce_selftest(int full, uint64_t seed, char** report, int* all_passed) {
    if (!report)
        return null_argument("report");
    if (!all_passed)
        return null_argument("all_passed");
    *report = nullptr;
    return guarded([&] {
        qadce::SelftestOptions opts;
        opts.full = full != 0;
        opts.seed = seed;
        nlohmann::json out = nlohmann::json::array();
        bool ok = true;
        for (const auto& c : qadce::run_selftest(opts)) {
            ok = ok && c.passed;
            out.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
        }
        *all_passed = ok ? 1 : 0;
        *report = duplicate(out.dump(2));
        return QADCE_OK;
    });
}

} // extern "C"
