#include "pathopt/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "pathopt/errors.hpp"
#include "pathopt/rng.hpp"

namespace pathopt {

LossTrajectory make_trajectory(std::string strategy, std::uint64_t seed, std::vector<double> losses)
{
    LossTrajectory t;
    t.strategy = std::move(strategy);
    t.seed = seed;
    t.running.resize(losses.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        sum += losses[i];
        t.running[i] = sum / static_cast<double>(i + 1);
    }
    t.losses = std::move(losses);
    return t;
}

Path sample_for_loss(const ProcessModel& model, const LossFunction& loss, std::size_t horizon,
                     std::uint64_t seed)
{
    return model.sample_path(horizon, seed, loss.window().future);
}

LossTrajectory run_strategy(Strategy& strategy, const LossFunction& loss, const Path& path)
{
    strategy.reset(path.seed);
    std::vector<double> losses(path.horizon);
    const std::span<const int> y(path.y);
    for (std::size_t k = 1; k <= path.horizon; ++k) {
        try {
            const std::size_t u = strategy.decide(k, y.first(k + 1));
            losses[k - 1] = loss.eval(u, path, k);
        } catch (const std::exception& e) {
            throw StepFailure(k, e.what());
        }
    }
    return make_trajectory(strategy.name(), path.seed, std::move(losses));
}

LossTrajectory time_average_loss(const ProcessModel& model, const StrategySpec& spec, const LossFunction& loss,
                                 std::size_t horizon, std::uint64_t seed)
{
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    const Path path = sample_for_loss(model, loss, horizon, seed);
    auto strategy = make_strategy(spec, model, loss);
    return run_strategy(*strategy, loss, path);
}

std::vector<double> regret_trajectory(const LossTrajectory& a, const LossTrajectory& b)
{
    if (a.seed != b.seed)
        throw std::invalid_argument("regret_trajectory: trajectories come from different seeds");
    if (a.horizon() != b.horizon())
        throw std::invalid_argument("regret_trajectory: horizons differ");
    std::vector<double> out(a.horizon());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.running[i] - b.running[i];
    return out;
}

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials)
{
    ProportionEstimate e;
    e.successes = successes;
    e.trials = trials;
    if (trials == 0)
        return e;
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    e.estimate = p;
    e.lower = std::max(0.0, centre - half);
    e.upper = std::min(1.0, centre + half);
    return e;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

ProportionEstimate weak_opt_probability(const ProcessModel& model, const StrategySpec& strategy,
                                        const StrategySpec& reference, const LossFunction& loss,
                                        std::size_t horizon, double epsilon, std::size_t n_seeds,
                                        std::uint64_t master_seed, unsigned threads)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("weak_opt_probability: epsilon must be > 0");
    if (n_seeds < 1)
        throw std::invalid_argument("weak_opt_probability: need at least one seed");
    const auto proto_u = make_strategy(strategy, model, loss);
    const auto proto_ref = make_strategy(reference, model, loss);
    std::vector<char> hit(n_seeds, 0);
    parallel_for(n_seeds, threads, [&](std::size_t i) {
        const Path path = sample_for_loss(model, loss, horizon, derive_seed(master_seed, i));
        auto u = proto_u->clone();
        auto ref = proto_ref->clone();
        const double lu = run_strategy(*u, loss, path).final_average();
        const double lr = run_strategy(*ref, loss, path).final_average();
        hit[i] = (lu - lr >= -epsilon) ? 1 : 0;
    });
    std::size_t successes = 0;
    for (char h : hit)
        successes += static_cast<std::size_t>(h);
    return wilson_interval(successes, n_seeds);
}

double estimate_lstar(const ProcessModel& model, const LossFunction& loss, std::size_t horizon,
                      std::uint64_t seed)
{
    const FiniteHmm* hmm = model.finite_hmm();
    if (!hmm)
        throw std::invalid_argument("estimate_lstar requires a finite-state model");
    if (!loss.state_only())
        throw std::invalid_argument("estimate_lstar requires a state-only loss");
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    const Path path = sample_for_loss(model, loss, horizon, seed);
    const Matrix table = state_loss_table(loss, hmm->states());
    Belief b = stationary_belief(*hmm);
    double sum = 0.0;
    for (std::size_t k = 0; k <= horizon; ++k) {
        b = filter_update(*hmm, b, path.y[k], k);
        if (k == 0)
            continue;
        double best = 0.0;
        for (std::size_t u = 0; u < table.rows(); ++u) {
            double s = 0.0;
            for (std::size_t x = 0; x < b.size(); ++x)
                s += b.p[x] * table(u, x);
            if (u == 0 || s < best)
                best = s;
        }
        sum += best;
    }
    return sum / static_cast<double>(horizon);
}

std::vector<double> conditional_mixing_window(const FiniteHmm& hmm, const LossFunction& loss,
                                              std::span<const int> window, std::size_t max_lag,
                                              double truncation)
{
    if (!loss.state_only())
        throw std::invalid_argument("conditional mixing profile requires a state-only loss");
    const std::size_t d = hmm.states();
    const std::size_t nu = loss.grid().size();
    Matrix table(nu, d);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < d; ++x)
            table(u, x) = loss.bound_state(x) <= truncation ? loss.eval_state(u, x) : 0.0;

    auto centered = [&](const Belief& filter) {
        Matrix c(nu, d);
        for (std::size_t u = 0; u < nu; ++u) {
            double mean = 0.0;
            for (std::size_t x = 0; x < d; ++x)
                mean += filter.p[x] * table(u, x);
            for (std::size_t x = 0; x < d; ++x)
                c(u, x) = table(u, x) - mean;
        }
        return c;
    };

    const SmootherSweep sweep = smoother_sweep(hmm, window, max_lag);
    const Matrix now = centered(sweep.filters[0]);
    std::vector<double> out(max_lag + 1, 0.0);
    std::vector<double> proj(d);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        const Matrix lagged = centered(sweep.filters[k]);
        const Matrix& joint = sweep.joints[k];
        double best = 0.0;
        for (std::size_t u = 0; u < nu; ++u) {
            // proj = lbar_{-k}(u)^T J
            std::fill(proj.begin(), proj.end(), 0.0);
            for (std::size_t x = 0; x < d; ++x) {
                const double a = lagged(u, x);
                if (a == 0.0)
                    continue;
                for (std::size_t x2 = 0; x2 < d; ++x2)
                    proj[x2] += a * joint(x, x2);
            }
            for (std::size_t v = 0; v < nu; ++v) {
                double s = 0.0;
                for (std::size_t x2 = 0; x2 < d; ++x2)
                    s += proj[x2] * now(v, x2);
                best = std::max(best, std::abs(s));
            }
        }
        out[k] = best;
    }
    return out;
}

MixingProfile conditional_mixing_profile(const ProcessModel& model, const LossFunction& loss,
                                         const MixingRequest& request)
{
    const FiniteHmm* hmm = model.finite_hmm();
    if (!hmm)
        throw std::invalid_argument("conditional mixing profile requires a finite-state model");
    if (request.max_lag > request.window)
        throw std::invalid_argument("conditional mixing profile: max lag K must not exceed window W");
    if (request.windows < 1 || request.window < 1)
        throw std::invalid_argument("conditional mixing profile: need W >= 1 and at least one window");
    MixingProfile profile;
    profile.window = request.window;
    profile.truncation = request.truncation;
    profile.grid_size = loss.grid().size();
    profile.values.assign(request.max_lag + 1, 0.0);
    for (std::size_t i = 0; i < request.windows; ++i) {
        const Path path = model.sample_path(request.window, derive_seed(request.seed, i));
        const auto m = conditional_mixing_window(*hmm, loss, path.y, request.max_lag, request.truncation);
        for (std::size_t k = 0; k < m.size(); ++k)
            profile.values[k] += m[k];
    }
    for (double& v : profile.values)
        v /= static_cast<double>(request.windows);
    profile.cesaro.resize(profile.values.size());
    profile.cesaro[0] = profile.values[0];
    double sum = 0.0;
    for (std::size_t k = 1; k < profile.values.size(); ++k) {
        sum += profile.values[k];
        profile.cesaro[k] = sum / static_cast<double>(k);
    }
    return profile;
}

std::vector<double> beta_mixing_profile(const FiniteHmm& hmm, std::size_t n_max)
{
    std::vector<double> out;
    out.reserve(n_max);
    // (P - 1 pi)^n = P^n - 1 pi, and powering the difference avoids the
    // cancellation of subtracting pi from P^n once beta is tiny.
    const std::size_t d = hmm.states();
    Matrix centered = hmm.transition;
    for (std::size_t x = 0; x < d; ++x)
        for (std::size_t y = 0; y < d; ++y)
            centered(x, y) -= hmm.stationary[y];
    Matrix power = centered;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1)
            power = power * centered;
        double beta = 0.0;
        for (std::size_t x = 0; x < d; ++x) {
            double tv = 0.0;
            for (std::size_t y = 0; y < d; ++y)
                tv += std::abs(power(x, y));
            beta += hmm.stationary[x] * 0.5 * tv;
        }
        out.push_back(beta);
    }
    return out;
}

ParticleDiagnostics particle_diagnostics(const ProcessModel& model, const LossFunction& loss,
                                         std::size_t particles, std::size_t horizon, std::uint64_t seed)
{
    const FiniteHmm* hmm = model.finite_hmm();
    if (!hmm)
        throw std::invalid_argument("particle diagnostics need the exact filter of a finite-state model");
    const Path path = sample_for_loss(model, loss, horizon, seed);
    const Matrix table = state_loss_table(loss, hmm->states());
    const std::uint64_t run_seed = derive_seed(seed, 0xA5A5A5A5ULL);
    Belief exact = stationary_belief(*hmm);
    ParticleEnsemble ensemble;
    double tv_sum = 0.0;
    std::size_t disagreements = 0;
    for (std::size_t k = 0; k <= horizon; ++k) {
        exact = filter_update(*hmm, exact, path.y[k], k);
        const std::uint64_t step_seed = derive_seed(run_seed, k);
        ensemble = k == 0 ? initial_ensemble(model, particles, path.y[0], step_seed)
                          : particle_update(model, ensemble, path.y[k], step_seed);
        const Belief approx = ensemble_belief(ensemble, hmm->states());
        tv_sum += total_variation(approx.p, exact.p);
        if (k > 0 && argmin_expected_loss(table, approx.p) != argmin_expected_loss(table, exact.p))
            ++disagreements;
    }
    ParticleDiagnostics out;
    out.mean_tv = tv_sum / static_cast<double>(horizon + 1);
    out.disagreement = static_cast<double>(disagreements) / static_cast<double>(horizon);
    return out;
}

double batch_means_stderr(std::span<const double> series, std::size_t batches)
{
    if (batches < 2 || series.size() < batches)
        throw std::invalid_argument("batch_means_stderr: need at least two non-empty batches");
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < len; ++i)
            means[b] += series[b * len + i];
        means[b] /= static_cast<double>(len);
    }
    double mean = 0.0;
    for (double m : means)
        mean += m;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means)
        var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
}

double expected_min_block_lookahead(int n)
{
    if (n < 1 || n > 24)
        throw std::invalid_argument("expected_min_block_lookahead: n must be in [1, 24]");
    // bit j-1 of `bits` is X_{2^j}, j = 1..n+1; u^0 reads j = 1..n, u^1 reads j = 2..n+1
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    const std::uint64_t outcomes = std::uint64_t{1} << (n + 1);
    long double total = 0.0L;
    for (std::uint64_t bits = 0; bits < outcomes; ++bits) {
        const std::uint64_t a0 = bits & mask;
        const std::uint64_t a1 = (bits >> 1) & mask;
        total += static_cast<long double>(std::min(a0, a1));
    }
    return static_cast<double>(total / static_cast<long double>(outcomes) / static_cast<long double>(mask));
}

} // namespace pathopt
