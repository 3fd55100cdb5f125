// Command-line front end. Talks to the library only through qadce.h.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qadce/qadce.h"

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3, kInterrupted = 130 };

std::atomic<bool> interrupted{false};

extern "C" void on_sigint(int) { interrupted = true; }

void error_line(const std::string& kind, int status, const std::string& message) {
    nlohmann::json j{{"error", kind}, {"status", status}, {"message", message}};
    std::cerr << j.dump() << std::endl;
}

// Failure from the library: report and map to an exit code.
int library_error(qadce_status s) {
    error_line(qadce_status_name(s), static_cast<int>(s), qadce_last_error());
    return (s == QADCE_ERR_CONFIG || s == QADCE_ERR_INVALID_ARGUMENT) ? kUsage : kRuntime;
}

struct Unique {
    void operator()(qadce_config* c) const { qadce_config_destroy(c); }
    void operator()(qadce_trial* t) const { qadce_trial_destroy(t); }
    void operator()(char* s) const { qadce_string_free(s); }
};
using ConfigPtr = std::unique_ptr<qadce_config, Unique>;
using TrialPtr = std::unique_ptr<qadce_trial, Unique>;
using StringPtr = std::unique_ptr<char, Unique>;

struct ConfigArgs {
    std::string profile = "desk";
    std::string file;
    std::vector<std::string> overrides;

    void attach(CLI::App* app) {
        app->add_option("--profile", profile, "Base profile before the file and overrides")
            ->check(CLI::IsMember({"desk", "large"}));
        app->add_option("-c,--config", file, "Config file of key = value lines")->check(CLI::ExistingFile);
        app->add_option("-s,--set", overrides, "Override a config key (key=value), repeatable");
    }

    // Profile, then file, then --set overrides in order. Returns an exit
    // code; failures are already reported.
    int build(ConfigPtr& out) const {
        qadce_config* raw = nullptr;
        qadce_status s = qadce_config_create_profile(profile.c_str(), &raw);
        if (s != QADCE_OK)
            return library_error(s);
        out.reset(raw);
        if (!file.empty() && (s = qadce_config_load_file(raw, file.c_str())) != QADCE_OK)
            return library_error(s);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                error_line("usage", QADCE_ERR_CONFIG, "override '" + kv + "' is not key=value");
                return kUsage;
            }
            const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
            if ((s = qadce_config_set(raw, key.c_str(), value.c_str())) != QADCE_OK)
                return library_error(s);
        }
        if ((s = qadce_config_validate(raw)) != QADCE_OK)
            return library_error(s);
        return kOk;
    }
};

// Writes to --output when given, else stdout; flushes after every line.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw std::runtime_error("cannot open output file '" + path + "'");
        }
    }
    void line(const std::string& s) {
        out() << s << '\n';
        out().flush();
    }

private:
    std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    std::ofstream file_;
};

int cmd_trial(const ConfigArgs& ca, std::uint64_t seed, int count, bool timing, const std::string& output,
              const std::string& trace) {
    ConfigPtr cfg;
    if (int rc = ca.build(cfg); rc != kOk)
        return rc;
    Sink sink(output);
    char* header = nullptr;
    if (qadce_status s = qadce_trial_csv_header(timing, &header); s != QADCE_OK)
        return library_error(s);
    sink.line(StringPtr(header).get());
    for (int i = 0; i < count; ++i) {
        if (interrupted)
            return kInterrupted;
        qadce_trial* raw = nullptr;
        if (qadce_status s = qadce_trial_run(cfg.get(), seed + static_cast<std::uint64_t>(i), &raw); s != QADCE_OK)
            return library_error(s);
        TrialPtr trial(raw);
        char* row = nullptr;
        if (qadce_status s = qadce_trial_csv_row(trial.get(), timing, &row); s != QADCE_OK)
            return library_error(s);
        sink.line(StringPtr(row).get());
        if (!trace.empty()) {
            char* csv = nullptr;
            if (qadce_status s = qadce_trial_trace_csv(trial.get(), &csv); s != QADCE_OK)
                return library_error(s);
            StringPtr owned(csv);
            const std::string path = count == 1 ? trace : trace + "." + std::to_string(seed + i);
            std::ofstream f(path);
            if (!(f << owned.get())) {
                error_line("io", QADCE_ERR_IO, "cannot write trace file '" + path + "'");
                return kRuntime;
            }
        }
    }
    return kOk;
}

struct SweepArgs {
    std::string axis = "pilot_length";
    std::string values;
    int trials = 50;
    std::uint64_t seed_base = 1;
    int threads = 0;
    std::string output;
};

int cmd_sweep(const ConfigArgs& ca, const SweepArgs& sa) {
    ConfigPtr cfg;
    if (int rc = ca.build(cfg); rc != kOk)
        return rc;
    Sink sink(sa.output);
    qadce_sweep_options opts{sa.axis.c_str(), sa.values.c_str(), sa.trials, sa.seed_base, sa.threads};
    auto on_row = [](const char* row, void* user) -> int {
        static_cast<Sink*>(user)->line(row);
        return interrupted ? 1 : 0;
    };
    const qadce_status s = qadce_sweep_run(cfg.get(), &opts, on_row, &sink, nullptr);
    if (s == QADCE_ERR_CANCELLED) {
        error_line("interrupted", static_cast<int>(s), "sweep interrupted; rows so far were written");
        return kInterrupted;
    }
    return s == QADCE_OK ? kOk : library_error(s);
}

int cmd_quantizer_report(const std::vector<int>& bits, double input_std, const std::string& output) {
    char* json = nullptr;
    if (qadce_status s = qadce_quantizer_report(bits.data(), bits.size(), input_std, &json); s != QADCE_OK)
        return library_error(s);
    Sink(output).line(StringPtr(json).get());
    return kOk;
}

int cmd_selftest(bool full, std::uint64_t seed, bool json_out) {
    char* report = nullptr;
    int passed = 0;
    if (qadce_status s = qadce_selftest(full, seed, &report, &passed); s != QADCE_OK)
        return library_error(s);
    StringPtr owned(report);
    if (json_out) {
        std::cout << owned.get() << std::endl;
    } else {
        for (const auto& c : nlohmann::json::parse(owned.get())) {
            std::printf("%-4s %-24s %8.2fs  %s\n", c["passed"].get<bool>() ? "PASS" : "FAIL",
                        c["name"].get<std::string>().c_str(), c["seconds"].get<double>(),
                        c["detail"].get<std::string>().c_str());
        }
        std::fflush(stdout);
    }
    if (!passed) {
        error_line("selftest", kCheckFailed, "one or more selftest checks failed");
        return kCheckFailed;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_sigint);

    CLI::App app{"Joint activity detection and channel estimation under low-resolution ADCs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qadce_version()));

    ConfigArgs trial_cfg, sweep_cfg;

    auto* trial = app.add_subcommand("trial", "Run seeded trials and print one CSV row each");
    std::uint64_t trial_seed = 1;
    int trial_count = 1;
    bool trial_timing = false;
    std::string trial_output;
    trial_cfg.attach(trial);
    trial->add_option("--seed", trial_seed, "Seed of the first trial");
    trial->add_option("-n,--count", trial_count, "Number of consecutive seeds")->check(CLI::PositiveNumber);
    trial->add_flag("--timing", trial_timing, "Append a wall_time_s column");
    trial->add_option("-o,--output", trial_output, "Write CSV here instead of stdout");
    std::string trial_trace;
    trial->add_option("--trace", trial_trace,
                      "Write the per-iteration trace CSV here (suffixed with the seed when --count > 1)");

    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter and print aggregate CSV rows");
    SweepArgs sweep_args;
    sweep_cfg.attach(sweep);
    sweep->add_option("--axis", sweep_args.axis, "pilot_length, snr_db or adc_bits")
        ->check(CLI::IsMember({"pilot_length", "snr_db", "adc_bits"}));
    sweep->add_option("--values", sweep_args.values, "Comma-separated axis values")->required();
    sweep->add_option("--trials", sweep_args.trials, "Trials per point")->check(CLI::PositiveNumber);
    sweep->add_option("--seed-base", sweep_args.seed_base, "Seed of the first trial at every point");
    sweep->add_option("--threads", sweep_args.threads, "Worker threads (0: QADCE_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sweep->add_option("-o,--output", sweep_args.output, "Write CSV here instead of stdout");

    auto* qreport = app.add_subcommand("quantizer-report", "Lloyd-Max designs with Bussgang statistics as JSON");
    std::vector<int> q_bits{1, 2, 3};
    double q_std = 1.0;
    std::string q_output;
    qreport->add_option("--bits", q_bits, "Bit widths")->delimiter(',');
    qreport->add_option("--std", q_std, "Input standard deviation")->check(CLI::PositiveNumber);
    qreport->add_option("-o,--output", q_output, "Write JSON here instead of stdout");

    auto* selftest = app.add_subcommand("selftest", "Run the oracle suites");
    bool st_full = false, st_json = false;
    std::uint64_t st_seed = 1;
    selftest->add_flag("--full", st_full, "Use the large sample counts");
    selftest->add_option("--seed", st_seed, "Seed for the randomized checks");
    selftest->add_flag("--json", st_json, "Print the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line("usage", e.get_exit_code(), e.what());
        return kUsage;
    }

    try {
        if (*trial)
            return cmd_trial(trial_cfg, trial_seed, trial_count, trial_timing, trial_output, trial_trace);
        if (*sweep)
            return cmd_sweep(sweep_cfg, sweep_args);
        if (*qreport)
            return cmd_quantizer_report(q_bits, q_std, q_output);
        if (*selftest)
            return cmd_selftest(st_full, st_seed, st_json);
    } catch (const std::exception& e) {
        error_line("io", QADCE_ERR_IO, e.what());
        return kRuntime;
    }
    return kUsage;
}
