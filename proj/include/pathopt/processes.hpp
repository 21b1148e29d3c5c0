#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathopt/matrix.hpp"
#include "pathopt/rng.hpp"

namespace pathopt {

enum class ProcessKind {
    FlipFlop,        ///< X_0 ~ Bernoulli(1/2), X_k = 1 - X_{k-1}, blind.
    XorPair,         ///< X_k = (xi_{k-1}, xi_k), Y_k = |xi_k - xi_{k-1}|.
    BinaryExpansion, ///< X_{k+1} = (X_k + eps_{k+1}) / 2, blind, B-bit words.
    LookaheadIID,    ///< X i.i.d. Bernoulli(1/2), blind.
    DoublingMap,     ///< X_{k+1} = 2 X_k mod 1, blind, B-bit words.
    FiniteHMM,       ///< Finite hidden Markov model started in stationarity.
};

std::string_view to_string(ProcessKind kind);
ProcessKind process_kind_from_string(std::string_view name);

struct ModelSpec {
    ProcessKind kind = ProcessKind::FlipFlop;
    int bit_depth = 32;  ///< B, dyadic variants only
    int max_delay = 8;   ///< r_max: driving bits are kept down to index 1 - r_max
    Matrix transition;   ///< FiniteHMM only, d x d
    Matrix emission;     ///< FiniteHMM only, d x m

    bool operator==(const ModelSpec&) const = default;
};

/// Validated finite HMM with cached stationary law and cumulative rows.
struct FiniteHmm {
    Matrix transition;
    Matrix emission;
    std::vector<double> stationary;
    Matrix transition_cdf;
    Matrix emission_cdf;

    std::size_t states() const { return transition.rows(); }
    std::size_t symbols() const { return emission.cols(); }
};

/// Builds a FiniteHmm, checking stochasticity and irreducibility.
FiniteHmm make_finite_hmm(Matrix transition, Matrix emission);

/// Driving-noise bits indexed from `first_index` (may be negative).
struct NoiseRecord {
    std::int64_t first_index = 0;
    std::vector<std::uint8_t> bits;

    bool contains(std::int64_t i) const
    {
        return i >= first_index && i < first_index + static_cast<std::int64_t>(bits.size());
    }
    int at(std::int64_t i) const { return bits.at(static_cast<std::size_t>(i - first_index)); }
    std::int64_t last_index() const { return first_index + static_cast<std::int64_t>(bits.size()) - 1; }

    bool operator==(const NoiseRecord&) const = default;
};

/// One sampled trajectory. x and y are indexed 0..size()-1; the first
/// horizon + 1 entries are the decision horizon, the rest is the look-ahead
/// extension required by losses that read future coordinates.
///
/// Hidden values are encoded as 64-bit words: a state index (finite
/// chains), a bit (FlipFlop, LookaheadIID), 2*xi_{k-1} + xi_k (XorPair), or
/// a B-bit dyadic word whose most significant bit is the 1/2 digit.
struct Path {
    std::vector<std::uint64_t> x;
    std::vector<int> y;
    NoiseRecord noise;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;

    std::size_t size() const { return x.size(); }
    bool operator==(const Path&) const = default;
};

/// Immutable, thread-shareable sampler for one of the catalog processes.
class ProcessModel {
public:
    explicit ProcessModel(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    ProcessKind kind() const { return spec_.kind; }

    /// Exact finite-state representation, when the variant has one.
    /// Dyadic variants return nullptr.
    const FiniteHmm* finite_hmm() const { return hmm_ ? &*hmm_ : nullptr; }

    std::size_t num_symbols() const;
    int bit_depth() const { return spec_.bit_depth; }
    bool is_dyadic() const;

    /// Path of length horizon + 1 + extension, deterministic in (spec, horizon, extension, seed).
    Path sample_path(std::size_t horizon, std::uint64_t seed, std::size_t extension = 0) const;

    // Single-step kernel access used by particle filters.
    std::uint64_t sample_initial(CounterRng& rng) const;
    std::uint64_t sample_next(std::uint64_t x, CounterRng& rng) const;
    double likelihood(std::uint64_t x, int y) const;

private:
    ModelSpec spec_;
    std::optional<FiniteHmm> hmm_;
};

ProcessModel build_model(const ModelSpec& spec);

/// Unique invariant law of an irreducible row-stochastic matrix.
std::vector<double> stationary_distribution(const Matrix& transition);

/// Throws ModelError unless every row is nonnegative and sums to 1 within 1e-12.
void check_stochastic(const Matrix& m, std::string_view what);

bool is_irreducible(const Matrix& transition);

/// Draws an index from a cumulative row.
std::size_t sample_categorical(std::span<const double> cdf, double u);

/// Value of a B-bit dyadic word as a real in [0, 1).
double dyadic_value(std::uint64_t word, int bit_depth);

} // namespace pathopt
