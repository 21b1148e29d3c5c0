#include "pathopt/filtering.hpp"

#include <algorithm>
#include <stdexcept>

#include "pathopt/errors.hpp"

namespace pathopt {

namespace {

void check_symbol(const FiniteHmm& hmm, int y)
{
    if (y < 0 || static_cast<std::size_t>(y) >= hmm.symbols())
        throw std::out_of_range("observation symbol " + std::to_string(y) + " outside alphabet of size "
                                + std::to_string(hmm.symbols()));
}

// Right-multiply by P diag(Phi(., y)) and rescale so that the largest entry is 1.
Matrix step_back(const FiniteHmm& hmm, int y, const Matrix& m)
{
    const std::size_t d = hmm.states();
    Matrix scaled(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            scaled(i, j) = hmm.transition(i, j) * hmm.emission(j, static_cast<std::size_t>(y));
    Matrix out = scaled * m;
    double mx = 0.0;
    for (double v : out.data())
        mx = std::max(mx, v);
    if (mx > 0.0)
        for (std::size_t i = 0; i < d; ++i)
            for (double& v : out.row(i))
                v /= mx;
    return out;
}

Matrix normalized_joint(const Belief& filter, const Matrix& forward)
{
    const std::size_t d = filter.size();
    Matrix joint(d, d);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            joint(i, j) = filter.p[i] * forward(i, j);
            total += joint(i, j);
        }
    if (!(total > 0.0))
        return Matrix{};
    for (std::size_t i = 0; i < d; ++i)
        for (double& v : joint.row(i))
            v /= total;
    return joint;
}

} // namespace

Belief stationary_belief(const FiniteHmm& hmm)
{
    return Belief{hmm.stationary};
}

Belief filter_update(const FiniteHmm& hmm, const Belief& belief, int y, std::size_t time)
{
    check_symbol(hmm, y);
    const std::size_t d = hmm.states();
    if (belief.size() != d)
        throw std::invalid_argument("belief dimension does not match the model");
    Belief out{std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < d; ++i) {
        const double pi = belief.p[i];
        if (pi == 0.0)
            continue;
        for (std::size_t j = 0; j < d; ++j)
            out.p[j] += pi * hmm.transition(i, j);
    }
    double total = 0.0;
    const auto col = static_cast<std::size_t>(y);
    for (std::size_t j = 0; j < d; ++j) {
        out.p[j] *= hmm.emission(j, col);
        total += out.p[j];
    }
    if (!(total > 0.0))
        throw DegenerateObservation(time);
    for (double& v : out.p)
        v /= total;
    return out;
}

std::vector<Belief> run_filter(const FiniteHmm& hmm, std::span<const int> observations)
{
    std::vector<Belief> out;
    out.reserve(observations.size());
    Belief b = stationary_belief(hmm);
    for (std::size_t k = 0; k < observations.size(); ++k) {
        b = filter_update(hmm, b, observations[k], k);
        out.push_back(b);
    }
    return out;
}

Belief filter_last(const FiniteHmm& hmm, std::span<const int> observations)
{
    Belief b = stationary_belief(hmm);
    for (std::size_t k = 0; k < observations.size(); ++k)
        b = filter_update(hmm, b, observations[k], k);
    return b;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u)
{
    const std::size_t n = weights.size();
    std::vector<std::size_t> idx(n);
    double cumulative = weights.empty() ? 0.0 : weights[0];
    std::size_t j = 0;
    const double step = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = (u + static_cast<double>(i)) * step;
        while (pos >= cumulative && j + 1 < n)
            cumulative += weights[++j];
        idx[i] = j;
    }
    return idx;
}

namespace {

ParticleEnsemble weight_and_resample(std::vector<std::uint64_t> proposed, std::vector<double> weights,
                                     CounterRng& rng)
{
    double total = 0.0;
    for (double w : weights)
        total += w;
    if (!(total > 0.0))
        throw ParticleDegeneracy();
    for (double& w : weights)
        w /= total;
    const auto idx = systematic_resample(weights, rng.uniform());
    ParticleEnsemble out;
    out.states.resize(proposed.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.states[i] = proposed[idx[i]];
    out.weights.assign(proposed.size(), 1.0 / static_cast<double>(proposed.size()));
    return out;
}

} // namespace

ParticleEnsemble initial_ensemble(const ProcessModel& model, std::size_t n, int y0, std::uint64_t seed)
{
    if (n < 1)
        throw std::invalid_argument("particle count must be >= 1");
    CounterRng rng(seed);
    std::vector<std::uint64_t> states(n);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        states[i] = model.sample_initial(rng);
        weights[i] = model.likelihood(states[i], y0);
    }
    return weight_and_resample(std::move(states), std::move(weights), rng);
}

ParticleEnsemble particle_update(const ProcessModel& model, const ParticleEnsemble& ensemble, int y,
                                 std::uint64_t seed)
{
    const std::size_t n = ensemble.size();
    if (n < 1)
        throw std::invalid_argument("particle ensemble is empty");
    CounterRng rng(seed);
    std::vector<std::uint64_t> states(n);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        states[i] = model.sample_next(ensemble.states[i], rng);
        weights[i] = ensemble.weights[i] * model.likelihood(states[i], y);
    }
    return weight_and_resample(std::move(states), std::move(weights), rng);
}

Belief ensemble_belief(const ParticleEnsemble& ensemble, std::size_t states)
{
    Belief b{std::vector<double>(states, 0.0)};
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        b.p.at(ensemble.states[i]) += ensemble.weights[i];
    double total = 0.0;
    for (double v : b.p)
        total += v;
    for (double& v : b.p)
        v /= total;
    return b;
}

Matrix joint_smoother(const FiniteHmm& hmm, std::span<const int> window, std::size_t lag)
{
    if (window.empty())
        throw std::invalid_argument("joint_smoother: empty window");
    if (lag + 1 > window.size())
        throw std::invalid_argument("joint_smoother: lag exceeds window length");
    const std::size_t w = window.size() - 1;
    Belief filter = filter_last(hmm, window.first(w - lag + 1));
    Matrix forward = Matrix::identity(hmm.states());
    for (std::size_t j = w; j > w - lag; --j) {
        check_symbol(hmm, window[j]);
        forward = step_back(hmm, window[j], forward);
    }
    Matrix joint = normalized_joint(filter, forward);
    if (joint.empty())
        throw DegenerateObservation(w);
    return joint;
}

SmootherSweep smoother_sweep(const FiniteHmm& hmm, std::span<const int> window, std::size_t max_lag)
{
    if (window.empty())
        throw std::invalid_argument("smoother_sweep: empty window");
    if (max_lag + 1 > window.size())
        throw std::invalid_argument("smoother_sweep: lag exceeds window length");
    const std::size_t w = window.size() - 1;
    const auto all = run_filter(hmm, window);
    SmootherSweep sweep;
    sweep.filters.reserve(max_lag + 1);
    sweep.joints.reserve(max_lag + 1);
    Matrix forward = Matrix::identity(hmm.states());
    for (std::size_t k = 0; k <= max_lag; ++k) {
        if (k > 0)
            forward = step_back(hmm, window[w - k + 1], forward);
        const Belief& filter = all[w - k];
        Matrix joint = normalized_joint(filter, forward);
        if (joint.empty())
            throw DegenerateObservation(w);
        sweep.filters.push_back(filter);
        sweep.joints.push_back(std::move(joint));
    }
    return sweep;
}

} // namespace pathopt
