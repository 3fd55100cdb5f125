#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qadce/config.hpp"
#include "qadce/detector.hpp"
#include "qadce/mm_solver.hpp"
#include "qadce/quantizer.hpp"

namespace qadce {

struct TrialRecord {
    MetricsRecord metrics;
    Index devices = 0;
    Index antennas = 0;
    Index active = 0;
    int iterations = 0;
    bool converged = false;
    double active_component_power = 0.0; // mean x_true^2 over active devices' components
    double wall_time_s = 0.0;
};

/// Everything a trial produced, for callers that need more than the metrics.
struct TrialOutcome {
    TrialRecord record;
    Scene scene;
    RealMeasurement measurement;
    ScalarQuantizer quantizer = ScalarQuantizer::identity();
    VectorXd r_obs;
    SolverState state;
    DetectionResult detection;
    MatrixXc channel_estimate; // antenna domain
};

/// Lloyd-Max design for a unit-variance input, cached per bit width.
const ScalarQuantizer& unit_lloyd_max(int bits);

/// Per-component variance of x under the generative model, q_s / (2M).
double prior_component_variance(const SystemConfig& cfg);

/// scene -> pilots -> synthesize -> quantize -> Bussgang model -> precompute
/// -> solve -> detect -> metrics. Deterministic in (cfg, seed).
TrialOutcome run_trial_full(const SystemConfig& cfg, std::uint64_t seed);
TrialRecord run_trial(const SystemConfig& cfg, std::uint64_t seed);

enum class SweepAxis { PilotLength, SnrDb, AdcBits };

const char* to_string(SweepAxis axis) noexcept;
SweepAxis parse_sweep_axis(std::string_view text);

/// Sets the swept field; an infinite value on AdcBits means unquantized.
void apply_axis(SystemConfig& cfg, SweepAxis axis, double value);

struct SweepSpec {
    SystemConfig base;
    SweepAxis axis = SweepAxis::PilotLength;
    std::vector<double> values;
    int trials_per_point = 50;
    std::uint64_t seed_base = 1;
    int threads = 0; // 0: QADCE_THREADS env var, else hardware concurrency

    void validate() const;
};

struct MetricSummary {
    double mean = 0.0;
    double std_error = 0.0;
    int count = 0; // trials where the metric was defined
};

struct SweepPoint {
    double value = 0.0;
    MetricSummary mse, tpr, fnr, fpr;
    int trials = 0;
};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepSpec& spec, const SweepPoint& point);

std::string trial_csv_header(bool with_timing = false);
std::string trial_csv_row(const TrialRecord& rec, bool with_timing = false);

/// Mean and standard error of each metric over the records.
SweepPoint aggregate(double value, const std::vector<TrialRecord>& records);

/// Trials for one axis value, run in parallel and returned in seed order.
std::vector<TrialRecord> run_point(const SweepSpec& spec, double value);

/// Runs every point; on_row receives the header and then each aggregate CSV
/// row as soon as its point completes. Returning false stops the sweep after
/// that row. Returns the CSV emitted so far (header plus rows).
using RowCallback = std::function<bool(const std::string&)>;
std::string run_sweep(const SweepSpec& spec, const RowCallback& on_row = {});

/// Parses "40,70,100" (and "inf" entries).
std::vector<double> parse_value_list(std::string_view text);

/// %.9g formatting used in every CSV field.
std::string format_number(double v);

} // namespace qadce
