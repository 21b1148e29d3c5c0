#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathopt/filtering.hpp"
#include "pathopt/matrix.hpp"
#include "pathopt/processes.hpp"

namespace pathopt {

/// Finite ordered decision set U. Decisions are referred to by grid index.
class DecisionGrid {
public:
    enum class Kind { Values, Integers, Simplex };

    DecisionGrid() = default;

    static DecisionGrid values(std::vector<double> points);
    /// start, start + step, ..., stop; points computed as start + (stop - start) * i / n.
    static DecisionGrid range(double start, double stop, double step);
    static DecisionGrid integers(std::int64_t lo, std::int64_t hi);
    /// Lattice {p : p_i = n_i / divisions, sum p_i = 1} in lexicographic order of (n_0, n_1, ...).
    static DecisionGrid simplex(std::size_t assets, std::size_t divisions);

    Kind kind() const { return kind_; }
    std::size_t size() const;
    bool empty() const { return size() == 0; }

    /// Scalar value of decision i (Values and Integers grids).
    double scalar(std::size_t i) const;
    /// Portfolio weights of decision i (Simplex grids).
    std::span<const double> point(std::size_t i) const;
    std::size_t assets() const { return assets_; }

    std::optional<std::size_t> index_of(double value) const;
    std::optional<std::size_t> index_of(std::span<const double> point) const;

    double min_scalar() const;
    double max_scalar() const;

private:
    Kind kind_ = Kind::Values;
    std::vector<double> values_;
    std::int64_t lo_ = 0;
    std::int64_t hi_ = -1;
    std::size_t assets_ = 0;
};

enum class LossKind {
    Quadratic,      ///< (u - f(x_k))^2
    LpPrediction,   ///< |u - f(x_k)|^p
    LogPortfolio,   ///< -log <u, r(x_k)>
    Interval,       ///< 1 unless u <= f(x_k) < u + width
    BitLoss,        ///< eps_{k - u + 1}, read from the driving-bit record
    LookaheadIndex, ///< x_{k + u}
};

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

/// Scalar feature f(x) extracted from a hidden-value word.
struct FeatureSpec {
    enum class Kind { Identity, PairFirst, Dyadic, Table };
    Kind kind = Kind::Identity;
    std::vector<double> table; ///< Table only: f(state) = table[state]
    int bit_depth = 32;        ///< Dyadic only

    double operator()(std::uint64_t x) const;
    bool operator==(const FeatureSpec&) const = default;
};

std::string_view to_string(FeatureSpec::Kind kind);
FeatureSpec::Kind feature_kind_from_string(std::string_view name);

struct GridSpec {
    enum class Kind { Values, Range, Integers, Simplex };
    Kind kind = Kind::Values;
    std::vector<double> values;
    double start = 0.0, stop = 1.0, step = 0.5;
    std::int64_t lo = 0, hi = 1;
    std::size_t assets = 2, divisions = 10;

    DecisionGrid build() const;
    bool operator==(const GridSpec&) const = default;
};

struct LossSpec {
    LossKind kind = LossKind::Quadratic;
    FeatureSpec feature;
    double exponent = 2.0; ///< LpPrediction
    Matrix returns;        ///< LogPortfolio: row per hidden state, column per asset
    double width = 0.1;    ///< Interval
    GridSpec grid;

    bool operator==(const LossSpec&) const = default;
};

/// Coordinates of the path a loss may read at time k: [k - past, k + future].
/// For BitLoss the coordinates are indices into the driving-bit record.
struct LossWindow {
    std::size_t past = 0;
    std::size_t future = 0;
};

class LossFunction {
public:
    explicit LossFunction(LossSpec spec);

    const LossSpec& spec() const { return spec_; }
    LossKind kind() const { return spec_.kind; }
    const DecisionGrid& grid() const { return grid_; }
    LossWindow window() const { return window_; }

    /// True when the loss at time k is a function of x_k alone.
    bool state_only() const;

    /// l(u, x) for state-only losses.
    double eval_state(std::size_t u, std::uint64_t x) const;

    /// l_k(u) on a sampled path.
    double eval(std::size_t u, const Path& path, std::size_t k) const;

    /// Domination envelope Lambda evaluated on the path at time k.
    double bound(const Path& path, std::size_t k) const;
    double bound_state(std::uint64_t x) const;
    std::string bound_description() const;

private:
    LossSpec spec_;
    DecisionGrid grid_;
    LossWindow window_;
};

/// Free-function form of LossFunction::eval with full precondition checks.
double eval_loss(const LossFunction& loss, std::size_t u, const Path& path, std::size_t k);

/// sum_x belief(x) l(u, x) for a state-only loss over a finite state space.
double expected_loss_under_belief(const LossFunction& loss, std::size_t u, const Belief& belief);

/// Table of l(u, x) for u in U, x in 0..states-1 (rows: decisions).
Matrix state_loss_table(const LossFunction& loss, std::size_t states);

} // namespace pathopt
