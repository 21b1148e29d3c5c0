#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pathopt {

/// Malformed model specification (non-stochastic matrix, reducible chain, bad bit depth).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of its iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Observation has zero likelihood under the predicted law.
class DegenerateObservation : public std::runtime_error {
public:
    explicit DegenerateObservation(std::size_t time)
        : std::runtime_error("degenerate observation at time " + std::to_string(time)), time_(time) {}

    std::size_t time() const { return time_; }

private:
    std::size_t time_;
};

/// Every particle received zero weight.
class ParticleDegeneracy : public std::runtime_error {
public:
    ParticleDegeneracy() : std::runtime_error("particle degeneracy: all weights zero") {}
};

/// Loss evaluated outside its declared window or off its decision grid.
class LossDomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Strategy specification or schedule is invalid for the model/loss pair.
class StrategyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure inside a simulation run; `seed` is the path index, `step` the time k (0 when unknown).
class RunError : public std::runtime_error {
public:
    RunError(std::size_t seed, std::size_t step, const std::string& what)
        : std::runtime_error("seed " + std::to_string(seed) + ", step " + std::to_string(step) + ": " + what),
          seed_(seed), step_(step) {}

    std::size_t seed() const { return seed_; }
    std::size_t step() const { return step_; }

private:
    std::size_t seed_;
    std::size_t step_;
};

/// A strategy or loss failed at time `step`; rethrown with the seed by the runner.
class StepFailure : public std::runtime_error {
public:
    StepFailure(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}

    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

} // namespace pathopt
