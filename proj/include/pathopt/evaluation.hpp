#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pathopt/filtering.hpp"
#include "pathopt/losses.hpp"
#include "pathopt/processes.hpp"
#include "pathopt/strategies.hpp"

namespace pathopt {

/// Per-step losses l_k(u_k), k = 1..T, and running averages L_T.
struct LossTrajectory {
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<double> losses;  ///< losses[k-1] = l_k(u_k)
    std::vector<double> running; ///< running[T-1] = L_T

    std::size_t horizon() const { return losses.size(); }
    /// L_T for 1 <= T <= horizon().
    double average(std::size_t t) const { return running.at(t - 1); }
    double final_average() const { return running.back(); }
};

LossTrajectory make_trajectory(std::string strategy, std::uint64_t seed, std::vector<double> losses);

/// Path long enough for the loss window: horizon + 1 + the loss's future offset.
Path sample_for_loss(const ProcessModel& model, const LossFunction& loss, std::size_t horizon,
                     std::uint64_t seed);

/// Runs an already-built strategy on `path` (after reset(path.seed)).
LossTrajectory run_strategy(Strategy& strategy, const LossFunction& loss, const Path& path);

LossTrajectory time_average_loss(const ProcessModel& model, const StrategySpec& strategy,
                                 const LossFunction& loss, std::size_t horizon, std::uint64_t seed);

/// Pointwise L_T(a) - L_T(b); both trajectories must share seed and horizon.
std::vector<double> regret_trajectory(const LossTrajectory& a, const LossTrajectory& b);

struct ProportionEstimate {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double estimate = 0.0;
    double lower = 0.0; ///< 95% Wilson interval
    double upper = 0.0;
};

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials);

/// Calls body(i) for i in [0, n) on up to `threads` workers. Work is split by
/// index, so results written to slot i do not depend on the worker count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Estimates P[L_T(u) - L_T(reference) >= -epsilon] over path seeds
/// derive_seed(master_seed, 0 .. n_seeds - 1).
ProportionEstimate weak_opt_probability(const ProcessModel& model, const StrategySpec& strategy,
                                        const StrategySpec& reference, const LossFunction& loss,
                                        std::size_t horizon, double epsilon, std::size_t n_seeds,
                                        std::uint64_t master_seed, unsigned threads = 1);

/// Long-run average of min_u sum_x Pi_k(x) l(u, x) along one sampled path (k = 1..T).
double estimate_lstar(const ProcessModel& model, const LossFunction& loss, std::size_t horizon,
                      std::uint64_t seed);

struct MixingRequest {
    std::size_t window = 64;                                  ///< W
    double truncation = std::numeric_limits<double>::infinity(); ///< M
    std::size_t max_lag = 50;                                 ///< K
    std::size_t windows = 200;                                ///< sampled observation windows
    std::uint64_t seed = 0;
};

/// m_k for k = 0..K and their Cesaro means; cesaro[k] = mean(m_1..m_k) for
/// k >= 1 and cesaro[0] = m_0.
struct MixingProfile {
    std::vector<double> values;
    std::vector<double> cesaro;
    std::size_t window = 0;
    double truncation = std::numeric_limits<double>::infinity();
    std::size_t grid_size = 0;
};

/// Averaged max_{u,u'} |E[lbar(u) o T^{-k} * lbar(u') | y_{-W..0}]| for state-only losses.
MixingProfile conditional_mixing_profile(const ProcessModel& model, const LossFunction& loss,
                                         const MixingRequest& request);

/// The same quantity for one fixed window y_{-W..0}.
std::vector<double> conditional_mixing_window(const FiniteHmm& hmm, const LossFunction& loss,
                                              std::span<const int> window, std::size_t max_lag,
                                              double truncation);

/// beta(n) = sum_x pi(x) TV(P^n(x, .), pi) for n = 1..n_max.
std::vector<double> beta_mixing_profile(const FiniteHmm& hmm, std::size_t n_max);

struct ParticleDiagnostics {
    double mean_tv = 0.0;      ///< time-averaged TV(Pi_k^N, Pi_k), k = 0..T
    double disagreement = 0.0; ///< fraction of k = 1..T with different argmin decisions
};

/// Runs a bootstrap filter with n particles alongside the exact filter on one path.
ParticleDiagnostics particle_diagnostics(const ProcessModel& model, const LossFunction& loss,
                                         std::size_t particles, std::size_t horizon, std::uint64_t seed);

/// Standard error of the mean of an autocorrelated series by non-overlapping batch means.
double batch_means_stderr(std::span<const double> series, std::size_t batches);

/// E[min(L_{2^n-1}(u^0), L_{2^n-1}(u^1))] for the two block look-ahead
/// strategies on i.i.d. fair bits, by enumeration of the n + 1 shared bits.
double expected_min_block_lookahead(int n);

} // namespace pathopt
