#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathopt/config.hpp"
#include "pathopt/experiment.hpp"

namespace pathopt {

/// Unknown experiment name; the message lists the valid names.
class UnknownExperiment : public std::invalid_argument {
public:
    explicit UnknownExperiment(const std::string& name);
};

const std::vector<std::string>& experiment_names();

/// Pre-registered configuration; throws UnknownExperiment.
ExperimentConfig registered_config(const std::string& name);

/// Pass/fail rows for `name` evaluated on a finished run of its config.
std::vector<CheckResult> run_checks(const std::string& name, const RunReport& report);

/// Runs the registered config (master seed optionally overridden) and attaches the checks.
RunReport reproduce(const std::string& name, unsigned threads = 1,
                    std::optional<std::uint64_t> master_seed = std::nullopt);

std::string format_checks(const std::vector<CheckResult>& checks);

} // namespace pathopt
