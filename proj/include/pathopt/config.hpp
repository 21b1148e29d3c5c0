#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pathopt/losses.hpp"
#include "pathopt/processes.hpp"
#include "pathopt/strategies.hpp"

namespace pathopt {

/// Invalid experiment configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::size_t line, std::string field, const std::string& message);

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

struct MixingDiagnostic {
    std::size_t window = 64;
    double truncation = std::numeric_limits<double>::infinity();
    std::size_t max_lag = 50;
    std::size_t windows = 200;
    bool operator==(const MixingDiagnostic&) const = default;
};

struct ParticleDiagnostic {
    std::vector<std::size_t> counts;
    std::size_t horizon = 200;
    std::size_t seeds = 20;
    bool operator==(const ParticleDiagnostic&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ModelSpec model;
    LossSpec loss;
    std::vector<StrategySpec> strategies;
    std::string reference;              ///< label of the reference strategy, may be empty
    std::size_t horizon = 100;
    std::vector<std::size_t> checkpoints; ///< horizons written to trajectories.csv; horizon is always included
    std::size_t seeds = 1;
    std::uint64_t master_seed = 0;
    std::vector<double> epsilons;
    std::size_t batches = 100;           ///< batch count for per-path regret standard errors
    bool lstar = false;
    std::optional<MixingDiagnostic> mixing;
    std::optional<std::size_t> beta_max_lag;
    std::vector<ParticleDiagnostic> particles;
    std::string output = "out";

    /// Sorted checkpoints with the horizon appended.
    std::vector<std::size_t> effective_checkpoints() const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);
std::string serialize_config(const ExperimentConfig& config);

/// Builds every model/loss/strategy the config names; throws ConfigError on the first problem.
void validate_config(const ExperimentConfig& config);

} // namespace pathopt
