#include "pathopt/processes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathopt/errors.hpp"

namespace pathopt {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kStationaryTol = 1e-12;
constexpr std::size_t kStationaryMaxIter = 1'000'000;
constexpr std::size_t kStationaryStall = 200;

Matrix cumulative_rows(const Matrix& m)
{
    Matrix c(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            acc += m(i, j);
            c(i, j) = acc;
        }
        c(i, m.cols() - 1) = 1.0;
    }
    return c;
}

std::vector<bool> reachable(const Matrix& p, bool reverse)
{
    const std::size_t d = p.rows();
    std::vector<bool> seen(d, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < d; ++j) {
            const double w = reverse ? p(j, i) : p(i, j);
            if (w > 0.0 && !seen[j]) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

std::uint64_t low_mask(int bits)
{
    return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1);
}

} // namespace

std::string_view to_string(ProcessKind kind)
{
    switch (kind) {
    case ProcessKind::FlipFlop: return "flip_flop";
    case ProcessKind::XorPair: return "xor_pair";
    case ProcessKind::BinaryExpansion: return "binary_expansion";
    case ProcessKind::LookaheadIID: return "lookahead_iid";
    case ProcessKind::DoublingMap: return "doubling_map";
    case ProcessKind::FiniteHMM: return "finite_hmm";
    }
    return "unknown";
}

ProcessKind process_kind_from_string(std::string_view name)
{
    for (auto k : {ProcessKind::FlipFlop, ProcessKind::XorPair, ProcessKind::BinaryExpansion,
                   ProcessKind::LookaheadIID, ProcessKind::DoublingMap, ProcessKind::FiniteHMM})
        if (to_string(k) == name)
            return k;
    throw ModelError("unknown model kind '" + std::string(name) + "'");
}

void check_stochastic(const Matrix& m, std::string_view what)
{
    if (m.rows() == 0 || m.cols() == 0)
        throw ModelError(std::string(what) + ": empty matrix");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (double v : m.row(i)) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ModelError(std::string(what) + ": negative or non-finite entry in row "
                                 + std::to_string(i));
            s += v;
        }
        if (std::abs(s - 1.0) > kStochasticTol)
            throw ModelError(std::string(what) + ": row not stochastic (row " + std::to_string(i)
                             + " sums to " + std::to_string(s) + ")");
    }
}

bool is_irreducible(const Matrix& transition)
{
    const auto fwd = reachable(transition, false);
    const auto bwd = reachable(transition, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; })
        && std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

std::vector<double> stationary_distribution(const Matrix& transition)
{
    if (transition.rows() != transition.cols())
        throw ModelError("transition matrix must be square");
    check_stochastic(transition, "transition");
    if (!is_irreducible(transition))
        throw ModelError("reducible chain: no unique stationary distribution");

    const std::size_t d = transition.rows();
    // Iterate the lazy kernel (I + P) / 2: same invariant law, aperiodic,
    // so periodic chains such as the flip-flop converge geometrically.
    Matrix lazy = transition;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            lazy(i, j) = 0.5 * (transition(i, j) + (i == j ? 1.0 : 0.0));

    std::vector<double> pi(d, 1.0 / static_cast<double>(d));
    auto residual = [&](const std::vector<double>& v) {
        const auto vp = left_multiply(v, transition);
        double r = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            r = std::max(r, std::abs(vp[i] - v[i]));
        return r;
    };
    // Past the tolerance keep iterating to the floating-point fixed point and
    // return the iterate with the smallest residual.
    std::vector<double> best = pi;
    double best_res = residual(pi);
    std::size_t stalled = 0;
    for (std::size_t it = 0; it < kStationaryMaxIter; ++it) {
        auto next = left_multiply(pi, lazy);
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        for (double& v : next)
            v /= total;
        double change = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            change = std::max(change, std::abs(next[i] - pi[i]));
        pi = std::move(next);
        const double res = residual(pi);
        if (res < best_res) {
            best = pi;
            best_res = res;
            stalled = 0;
        } else {
            ++stalled;
        }
        if (change == 0.0 || (best_res <= kStationaryTol && stalled >= kStationaryStall))
            break;
    }
    if (best_res <= kStationaryTol)
        return best;
    throw ConvergenceError("stationary_distribution: no convergence within iteration budget");
}

FiniteHmm make_finite_hmm(Matrix transition, Matrix emission)
{
    if (transition.rows() != transition.cols())
        throw ModelError("transition matrix must be square");
    if (emission.rows() != transition.rows())
        throw ModelError("emission matrix must have one row per hidden state");
    check_stochastic(transition, "transition");
    check_stochastic(emission, "emission");
    FiniteHmm hmm;
    hmm.stationary = stationary_distribution(transition);
    hmm.transition_cdf = cumulative_rows(transition);
    hmm.emission_cdf = cumulative_rows(emission);
    hmm.transition = std::move(transition);
    hmm.emission = std::move(emission);
    return hmm;
}

std::size_t sample_categorical(std::span<const double> cdf, double u)
{
    for (std::size_t j = 0; j + 1 < cdf.size(); ++j)
        if (u < cdf[j])
            return j;
    return cdf.size() - 1;
}

double dyadic_value(std::uint64_t word, int bit_depth)
{
    return std::ldexp(static_cast<double>(word), -bit_depth);
}

ProcessModel::ProcessModel(ModelSpec spec) : spec_(std::move(spec))
{
    switch (spec_.kind) {
    case ProcessKind::FlipFlop:
        hmm_ = make_finite_hmm(Matrix{{0.0, 1.0}, {1.0, 0.0}}, Matrix{{1.0}, {1.0}});
        break;
    case ProcessKind::XorPair: {
        // state s = 2 * xi_{k-1} + xi_k; (a, b) -> (b, c) with c fair.
        Matrix p(4, 4);
        Matrix phi(4, 2);
        for (std::size_t s = 0; s < 4; ++s) {
            const std::size_t b = s & 1U;
            p(s, 2 * b) = 0.5;
            p(s, 2 * b + 1) = 0.5;
            phi(s, ((s >> 1) ^ (s & 1U)) & 1U) = 1.0;
        }
        hmm_ = make_finite_hmm(std::move(p), std::move(phi));
        break;
    }
    case ProcessKind::LookaheadIID:
        hmm_ = make_finite_hmm(Matrix{{0.5, 0.5}, {0.5, 0.5}}, Matrix{{1.0}, {1.0}});
        break;
    case ProcessKind::BinaryExpansion:
    case ProcessKind::DoublingMap:
        if (spec_.bit_depth < 1)
            throw ModelError("bit depth B must be >= 1");
        if (spec_.bit_depth > 63)
            throw ModelError("bit depth B must be <= 63");
        break;
    case ProcessKind::FiniteHMM:
        hmm_ = make_finite_hmm(spec_.transition, spec_.emission);
        break;
    }
    if (spec_.max_delay < 0)
        throw ModelError("max_delay must be >= 0");
}

ProcessModel build_model(const ModelSpec& spec)
{
    return ProcessModel(spec);
}

bool ProcessModel::is_dyadic() const
{
    return spec_.kind == ProcessKind::BinaryExpansion || spec_.kind == ProcessKind::DoublingMap;
}

std::size_t ProcessModel::num_symbols() const
{
    return hmm_ ? hmm_->symbols() : 1;
}

Path ProcessModel::sample_path(std::size_t horizon, std::uint64_t seed, std::size_t extension) const
{
    if (horizon < 1)
        throw std::invalid_argument("sample_path: horizon must be >= 1");
    const std::size_t n = horizon + 1 + extension;
    CounterRng rng(seed);
    Path path;
    path.seed = seed;
    path.horizon = horizon;
    path.x.resize(n);
    path.y.assign(n, 0);

    switch (spec_.kind) {
    case ProcessKind::FlipFlop: {
        const std::uint64_t x0 = static_cast<std::uint64_t>(rng.bit());
        for (std::size_t k = 0; k < n; ++k)
            path.x[k] = x0 ^ (k & 1U);
        break;
    }
    case ProcessKind::XorPair: {
        path.noise.first_index = -1;
        path.noise.bits.resize(n + 1);
        for (auto& b : path.noise.bits)
            b = static_cast<std::uint8_t>(rng.bit());
        for (std::size_t k = 0; k < n; ++k) {
            const auto prev = static_cast<std::uint64_t>(path.noise.bits[k]);
            const auto cur = static_cast<std::uint64_t>(path.noise.bits[k + 1]);
            path.x[k] = 2 * prev + cur;
            path.y[k] = static_cast<int>(prev ^ cur);
        }
        break;
    }
    case ProcessKind::LookaheadIID:
        for (auto& v : path.x)
            v = static_cast<std::uint64_t>(rng.bit());
        break;
    case ProcessKind::BinaryExpansion: {
        const int b = spec_.bit_depth;
        const std::int64_t lo = std::min<std::int64_t>(1 - b, 1 - spec_.max_delay);
        path.noise.first_index = lo;
        path.noise.bits.resize(static_cast<std::size_t>(static_cast<std::int64_t>(n) - lo));
        for (auto& v : path.noise.bits)
            v = static_cast<std::uint8_t>(rng.bit());
        std::uint64_t word = 0;
        for (int i = 0; i < b; ++i)
            word |= static_cast<std::uint64_t>(path.noise.at(-i)) << (b - 1 - i);
        path.x[0] = word;
        for (std::size_t k = 1; k < n; ++k) {
            word = (word >> 1)
                | (static_cast<std::uint64_t>(path.noise.at(static_cast<std::int64_t>(k))) << (b - 1));
            path.x[k] = word;
        }
        break;
    }
    case ProcessKind::DoublingMap: {
        const int b = spec_.bit_depth;
        path.noise.first_index = 0;
        path.noise.bits.resize(n + static_cast<std::size_t>(b) - 1);
        for (auto& v : path.noise.bits)
            v = static_cast<std::uint8_t>(rng.bit());
        std::uint64_t word = 0;
        for (int i = 0; i < b; ++i)
            word = (word << 1) | path.noise.bits[static_cast<std::size_t>(i)];
        path.x[0] = word;
        const std::uint64_t mask = low_mask(b);
        for (std::size_t k = 1; k < n; ++k) {
            word = ((word << 1) & mask) | path.noise.bits[k + static_cast<std::size_t>(b) - 1];
            path.x[k] = word;
        }
        break;
    }
    case ProcessKind::FiniteHMM: {
        const FiniteHmm& h = *hmm_;
        std::vector<double> pi_cdf(h.states());
        std::partial_sum(h.stationary.begin(), h.stationary.end(), pi_cdf.begin());
        std::size_t x = sample_categorical(pi_cdf, rng.uniform());
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0)
                x = sample_categorical(h.transition_cdf.row(x), rng.uniform());
            path.x[k] = x;
            path.y[k] = static_cast<int>(sample_categorical(h.emission_cdf.row(x), rng.uniform()));
        }
        break;
    }
    }
    return path;
}

std::uint64_t ProcessModel::sample_initial(CounterRng& rng) const
{
    if (is_dyadic()) {
        const int b = spec_.bit_depth;
        return rng.next_u64() >> (64 - b);
    }
    const FiniteHmm& h = *hmm_;
    double u = rng.uniform();
    for (std::size_t j = 0; j + 1 < h.states(); ++j) {
        if (u < h.stationary[j])
            return j;
        u -= h.stationary[j];
    }
    return h.states() - 1;
}

std::uint64_t ProcessModel::sample_next(std::uint64_t x, CounterRng& rng) const
{
    switch (spec_.kind) {
    case ProcessKind::BinaryExpansion: {
        const int b = spec_.bit_depth;
        return (x >> 1) | (static_cast<std::uint64_t>(rng.bit()) << (b - 1));
    }
    case ProcessKind::DoublingMap:
        return ((x << 1) & low_mask(spec_.bit_depth)) | static_cast<std::uint64_t>(rng.bit());
    default:
        return sample_categorical(hmm_->transition_cdf.row(x), rng.uniform());
    }
}

double ProcessModel::likelihood(std::uint64_t x, int y) const
{
    if (is_dyadic())
        return y == 0 ? 1.0 : 0.0;
    if (y < 0 || static_cast<std::size_t>(y) >= hmm_->symbols())
        return 0.0;
    return hmm_->emission(x, static_cast<std::size_t>(y));
}

} // namespace pathopt
