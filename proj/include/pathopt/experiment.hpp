#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathopt/config.hpp"
#include "pathopt/evaluation.hpp"

namespace pathopt {

inline constexpr const char* kToolVersion = "0.1.0";

struct TrajectoryRow {
    std::size_t seed = 0; ///< path index; the path seed is derive_seed(master_seed, seed)
    std::string strategy;
    std::size_t horizon = 0;
    double value = 0.0;
};

struct ProfileRow {
    std::string kind;
    std::size_t index = 0;
    double value = 0.0;
    std::size_t window = 0;
    std::string truncation; ///< "inf", a number, or "" when not applicable
};

struct SampleSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double stderr_mean = 0.0;
    std::size_t count = 0;
};

/// Summation in index order so the result does not depend on how samples were produced.
SampleSummary summarize(std::span<const double> values);

struct WeakOptSummary {
    double epsilon = 0.0;
    ProportionEstimate estimate;
};

struct StrategySummary {
    std::string label;
    SampleSummary final_loss; ///< over seeds, of L_T at the horizon
    std::vector<WeakOptSummary> weak_opt; ///< against the reference; empty without one
};

/// Per-path comparison against the reference over the whole horizon.
struct PathRegret {
    std::string strategy;
    std::size_t seed = 0;
    double difference = 0.0; ///< L_T(strategy) - L_T(reference)
    double stderr_diff = 0.0; ///< batch-means standard error of the per-step loss difference
};

/// One row of a reproduce table.
struct CheckResult {
    std::string name;
    std::string expected;
    std::string observed;
    bool passed = false;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<std::string> labels;
    std::vector<std::size_t> checkpoints;
    std::vector<TrajectoryRow> trajectories; ///< ordered by seed, strategy, T
    std::vector<StrategySummary> summaries;
    std::vector<PathRegret> regrets;
    std::vector<double> lstar; ///< per seed, when requested
    std::vector<ProfileRow> profiles;
    double wall_clock_seconds = 0.0;
    std::vector<CheckResult> checks; ///< filled by reproduce

    /// L_T at the horizon for `label` on path index `seed`.
    double final_loss(const std::string& label, std::size_t seed) const;
    /// L_T at the horizon for `label`, in seed order.
    std::vector<double> final_losses(const std::string& label) const;
    std::vector<double> profile(const std::string& kind) const;
};

/// Validates, runs every seed on `threads` workers and aggregates. Throws
/// ConfigError on an invalid config and RunError on a runtime failure.
RunReport run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// Summaries that depend only on the trajectory rows; run_experiment uses the same code.
std::vector<StrategySummary> summarize_trajectories(const std::vector<TrajectoryRow>& rows,
                                                    const std::vector<std::string>& labels,
                                                    const std::string& reference,
                                                    const std::vector<double>& epsilons);

std::string trajectories_csv(const RunReport& report);
std::string profiles_csv(const RunReport& report);
std::string report_json(const RunReport& report);

/// Parses trajectories.csv back into rows (values are exact, being printed with 17 digits).
std::vector<TrajectoryRow> parse_trajectories_csv(const std::string& text);

/// Writes trajectories.csv, profiles.csv and report.json into `directory`.
void write_outputs(const RunReport& report, const std::filesystem::path& directory);

std::string format_float17(double value);

} // namespace pathopt
