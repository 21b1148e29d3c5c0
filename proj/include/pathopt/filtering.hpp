#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathopt/matrix.hpp"
#include "pathopt/processes.hpp"

namespace pathopt {

/// Probability vector over hidden states: the conditional law of X_k given Y_0..Y_k.
struct Belief {
    std::vector<double> p;

    std::size_t size() const { return p.size(); }
    double operator[](std::size_t i) const { return p[i]; }
    bool operator==(const Belief&) const = default;
};

Belief stationary_belief(const FiniteHmm& hmm);

/// One prediction/correction step: p'(x') ~ Phi(x', y) sum_x P(x, x') p(x).
/// `time` is only used to label a DegenerateObservation.
Belief filter_update(const FiniteHmm& hmm, const Belief& belief, int y, std::size_t time = 0);

/// Pi_0 .. Pi_k for observations y_0 .. y_k, starting from the stationary prior.
std::vector<Belief> run_filter(const FiniteHmm& hmm, std::span<const int> observations);

/// Final filter only, without keeping the history.
Belief filter_last(const FiniteHmm& hmm, std::span<const int> observations);

/// Weighted particle approximation of the filter. After every update the
/// weights are uniform (systematic resampling at each step).
struct ParticleEnsemble {
    std::vector<std::uint64_t> states;
    std::vector<double> weights;

    std::size_t size() const { return states.size(); }
};

/// Resampling indices for normalized `weights` using the single offset u in [0, 1).
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u);

/// N particles from the stationary law, corrected by y_0 and resampled.
ParticleEnsemble initial_ensemble(const ProcessModel& model, std::size_t n, int y0, std::uint64_t seed);

/// Bootstrap step: propagate through the kernel, weight by the likelihood of
/// y, resample. Deterministic in seed.
ParticleEnsemble particle_update(const ProcessModel& model, const ParticleEnsemble& ensemble, int y,
                                 std::uint64_t seed);

/// Occupancy measure of a finite-state ensemble as a Belief over `states` points.
Belief ensemble_belief(const ParticleEnsemble& ensemble, std::size_t states);

/// Exact conditional joint law of (X_{-lag}, X_0) given the window
/// y_{-W} .. y_0 (window.size() == W + 1), filter started from stationarity at -W.
Matrix joint_smoother(const FiniteHmm& hmm, std::span<const int> window, std::size_t lag);

/// Everything the mixing diagnostics need from one window: for lag k = 0..max_lag,
/// the filter at -k (conditioned on y_{-W}..y_{-k}) and the joint law of
/// (X_{-k}, X_0) given the full window.
struct SmootherSweep {
    std::vector<Belief> filters; ///< filters[k] = law of X_{-k} given y_{-W..-k}
    std::vector<Matrix> joints;  ///< joints[k] = law of (X_{-k}, X_0) given y_{-W..0}
};

SmootherSweep smoother_sweep(const FiniteHmm& hmm, std::span<const int> window, std::size_t max_lag);

} // namespace pathopt
