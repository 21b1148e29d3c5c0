#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathopt/filtering.hpp"
#include "pathopt/losses.hpp"
#include "pathopt/processes.hpp"

namespace pathopt {

enum class StrategyKind {
    Constant,            ///< u_k = value
    Alternating,         ///< u_k = k mod 2
    Parity,              ///< u_k = (y_1 + ... + y_{k-1}) mod 2
    DelayShift,          ///< u_k = k + r
    BlockLookahead,      ///< u_k = 2^{r+n+1} - k for 2^n <= k < 2^{n+1}
    MeanOptimalExact,    ///< argmin of the loss averaged against the exact filter
    MeanOptimalParticle, ///< same, against a bootstrap particle filter
    FrozenWindow,        ///< mean-optimal map applied to the last k_n + 1 observations
};

std::string_view to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(std::string_view name);

struct StrategySpec {
    StrategyKind kind = StrategyKind::Constant;
    std::string name;               ///< report label; derived from the parameters when empty
    double value = 0.5;             ///< Constant on scalar grids
    std::vector<double> weights;    ///< Constant on simplex grids
    int shift = 0;                  ///< DelayShift / BlockLookahead r
    std::size_t particles = 100;    ///< MeanOptimalParticle N
    std::vector<std::size_t> schedule; ///< FrozenWindow k_1 < k_2 < ...
    std::uint64_t seed = 0;         ///< MeanOptimalParticle; mixed with the path seed

    std::string label() const;
    bool operator==(const StrategySpec&) const = default;
};

/// Causal decision rule. decide(k, y) may read y_0..y_k only and returns an
/// index into the loss's decision grid. Instances hold mutable filter state
/// and are not thread-safe; clone one per path.
class Strategy {
public:
    virtual ~Strategy() = default;

    virtual std::size_t decide(std::size_t k, std::span<const int> observations) = 0;

    /// Forget all state; `seed` keys the randomness of randomized strategies.
    virtual void reset(std::uint64_t seed) = 0;

    virtual std::unique_ptr<Strategy> clone() const = 0;

    const std::string& name() const { return name_; }

protected:
    explicit Strategy(std::string name) : name_(std::move(name)) {}

private:
    std::string name_;
};

/// Grid index minimizing sum_x belief(x) l(u, x); ties go to the lowest index.
std::size_t mean_optimal_decision(const Belief& belief, const LossFunction& loss);

/// Same argmin against a precomputed state_loss_table.
std::size_t argmin_expected_loss(const Matrix& table, std::span<const double> belief);

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, const ProcessModel& model,
                                        const LossFunction& loss);

/// Frozen-window strategy: for k_n <= k < k_{n+1} decide with the exact
/// filter restarted from stationarity on y_{k-k_n} .. y_k. Before k_1 the
/// whole prefix is used.
std::unique_ptr<Strategy> make_frozen_window(const LossFunction& loss, const ProcessModel& model,
                                             std::vector<std::size_t> schedule);

/// 1, 2, 4, ... up to and including the first power of two >= limit.
std::vector<std::size_t> geometric_schedule(std::size_t limit);

} // namespace pathopt
