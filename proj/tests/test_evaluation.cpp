#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pathopt/errors.hpp"
#include "pathopt/evaluation.hpp"
#include "pathopt/rng.hpp"

using namespace pathopt;

namespace {

LossSpec quadratic_spec(std::vector<double> grid)
{
    LossSpec s;
    s.kind = LossKind::Quadratic;
    s.grid.kind = GridSpec::Kind::Values;
    s.grid.values = std::move(grid);
    return s;
}

LossSpec fine_quadratic()
{
    LossSpec s;
    s.kind = LossKind::Quadratic;
    s.grid.kind = GridSpec::Kind::Range;
    s.grid.start = 0.0;
    s.grid.stop = 1.0;
    s.grid.step = 0.01;
    return s;
}

ModelSpec kind_spec(ProcessKind kind)
{
    ModelSpec s;
    s.kind = kind;
    return s;
}

ModelSpec hmm_spec(Matrix p, Matrix phi)
{
    ModelSpec s;
    s.kind = ProcessKind::FiniteHMM;
    s.transition = std::move(p);
    s.emission = std::move(phi);
    return s;
}

ModelSpec ergodic2()
{
    return hmm_spec(Matrix{{0.95, 0.05}, {0.1, 0.9}}, Matrix{{0.8, 0.2}, {0.3, 0.7}});
}

StrategySpec of_kind(StrategyKind kind)
{
    StrategySpec s;
    s.kind = kind;
    return s;
}

StrategySpec constant(double v)
{
    StrategySpec s;
    s.kind = StrategyKind::Constant;
    s.value = v;
    return s;
}

// m_k straight from the definition using enumerated smoothing laws.
std::vector<double> brute_mixing(const FiniteHmm& hmm, const LossFunction& loss, const std::vector<int>& window,
                                 std::size_t max_lag)
{
    const std::size_t d = hmm.states(), nu = loss.grid().size();
    const auto centre = [&](const std::vector<int>& obs, std::size_t u, std::size_t x) {
        const auto f = oracle::brute_filter(hmm, obs);
        double m = 0.0;
        for (std::size_t z = 0; z < d; ++z)
            m += f[z] * loss.eval_state(u, z);
        return loss.eval_state(u, x) - m;
    };
    std::vector<double> out;
    for (std::size_t k = 0; k <= max_lag; ++k) {
        const Matrix j = oracle::brute_joint(hmm, window, k);
        const std::vector<int> prefix(window.begin(), window.end() - static_cast<std::ptrdiff_t>(k));
        double best = 0.0;
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t v = 0; v < nu; ++v) {
                double s = 0.0;
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t b = 0; b < d; ++b)
                        s += j(a, b) * centre(prefix, u, a) * centre(window, v, b);
                best = std::max(best, std::abs(s));
            }
        out.push_back(best);
    }
    return out;
}

FiniteHmm permuted(const FiniteHmm& h, const std::vector<std::size_t>& perm)
{
    const std::size_t d = h.states();
    Matrix p(d, d), phi(d, h.symbols());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            p(perm[i], perm[j]) = h.transition(i, j);
        for (std::size_t y = 0; y < h.symbols(); ++y)
            phi(perm[i], y) = h.emission(i, y);
    }
    return make_finite_hmm(p, phi);
}

} // namespace

TEST(LossTrajectory, RunningAverageIdentity)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    const auto t = time_average_loss(model, of_kind(StrategyKind::MeanOptimalExact), loss, 5000, 3);
    ASSERT_EQ(t.horizon(), 5000u);
    double sum = 0.0;
    for (std::size_t i = 1; i <= t.horizon(); ++i) {
        sum += t.losses[i - 1];
        // the stored average is the left-to-right sum over T, bit for bit
        ASSERT_EQ(t.average(i), sum / static_cast<double>(i));
        if (i > 1) {
            const double step = static_cast<double>(i) * t.average(i) - static_cast<double>(i - 1) * t.average(i - 1);
            ASSERT_NEAR(step, t.losses[i - 1], 4.0 * std::numeric_limits<double>::epsilon() * i);
        }
    }
    // with dyadic losses every quantity is exact
    const ProcessModel ff(kind_spec(ProcessKind::FlipFlop));
    const LossFunction coarse(quadratic_spec({0.0, 0.5, 1.0}));
    const auto a = time_average_loss(ff, of_kind(StrategyKind::Alternating), coarse, 1024, 5);
    for (std::size_t i = 2; i <= a.horizon(); ++i)
        ASSERT_EQ(static_cast<double>(i) * a.average(i) - static_cast<double>(i - 1) * a.average(i - 1), a.losses[i - 1]);
}

TEST(TimeAverageLoss, FlipFlopExamples)
{
    const ProcessModel model(kind_spec(ProcessKind::FlipFlop));
    const LossFunction loss(quadratic_spec({0.0, 0.5, 1.0}));
    std::size_t zeros = 0;
    const std::size_t seeds = 10000;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        const auto half = time_average_loss(model, constant(0.5), loss, 100, seed);
        for (double v : half.running)
            ASSERT_EQ(v, 0.25);
        const auto alt = time_average_loss(model, of_kind(StrategyKind::Alternating), loss, 100, seed);
        const double l = alt.final_average();
        ASSERT_TRUE(l == 0.0 || l == 1.0);
        for (double v : alt.running)
            ASSERT_EQ(v, l);
        // Alternating wins exactly when X_0 = 0, i.e. X_k = k mod 2
        const Path p = model.sample_path(100, seed);
        EXPECT_EQ(l == 0.0, p.x[0] == 0);
        zeros += l == 0.0;
        const auto regret = regret_trajectory(alt, half);
        for (double r : regret)
            ASSERT_EQ(r, l == 0.0 ? -0.25 : 0.75);
    }
    EXPECT_NEAR(static_cast<double>(zeros) / seeds, 0.5, 0.03);
}

TEST(TimeAverageLoss, XorPairParity)
{
    const ProcessModel model(kind_spec(ProcessKind::XorPair));
    LossSpec ls = quadratic_spec({0.0, 0.5, 1.0});
    ls.feature.kind = FeatureSpec::Kind::PairFirst;
    const LossFunction loss(ls);
    std::size_t zeros = 0;
    const std::size_t seeds = 10000;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        const auto t = time_average_loss(model, of_kind(StrategyKind::Parity), loss, 100, seed);
        const double l = t.final_average();
        for (double v : t.running)
            ASSERT_EQ(v, l);
        ASSERT_TRUE(l == 0.0 || l == 1.0);
        // u_k = xi_0 xor xi_{k-1}, so the loss is xi_0
        const Path p = model.sample_path(100, seed);
        EXPECT_EQ(l, static_cast<double>(p.noise.at(0)));
        const auto ref = time_average_loss(model, of_kind(StrategyKind::MeanOptimalExact), loss, 100, seed);
        const double r = regret_trajectory(t, ref).back();
        EXPECT_TRUE(r == -0.25 || r == 0.75);
        zeros += l == 0.0;
    }
    EXPECT_NEAR(static_cast<double>(zeros) / seeds, 0.5, 0.03);
}

TEST(RegretTrajectory, IdenticalAndMismatched)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    const auto a = time_average_loss(model, constant(0.3), loss, 50, 1);
    for (double r : regret_trajectory(a, a))
        EXPECT_EQ(r, 0.0);
    const auto b = time_average_loss(model, constant(0.3), loss, 50, 2);
    EXPECT_THROW(regret_trajectory(a, b), std::invalid_argument);
    const auto c = time_average_loss(model, constant(0.3), loss, 40, 1);
    EXPECT_THROW(regret_trajectory(a, c), std::invalid_argument);
}

TEST(RegretTrajectory, ErgodicMeanOptimalBeatsConstantPathwise)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto e = time_average_loss(model, of_kind(StrategyKind::MeanOptimalExact), loss, 20000, seed);
        const auto c = time_average_loss(model, constant(0.33), loss, 20000, seed);
        const auto r = regret_trajectory(c, e);
        // tail minimum over the last half stands in for the liminf
        const double tail_min = *std::min_element(r.begin() + 10000, r.end());
        EXPECT_GE(tail_min, -0.01);
    }
}

TEST(WeakOpt, SelfComparisonIsOne)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    const auto s = of_kind(StrategyKind::MeanOptimalExact);
    const auto e = weak_opt_probability(model, s, s, loss, 200, 0.01, 100, 7, 2);
    EXPECT_EQ(e.estimate, 1.0);
    EXPECT_EQ(e.successes, 100u);
}

TEST(WeakOpt, XorPairParityTwoPointLaw)
{
    const ProcessModel model(kind_spec(ProcessKind::XorPair));
    LossSpec ls = quadratic_spec({0.0, 0.5, 1.0});
    ls.feature.kind = FeatureSpec::Kind::PairFirst;
    const LossFunction loss(ls);
    const auto e = weak_opt_probability(model, of_kind(StrategyKind::Parity), constant(0.5), loss, 500, 0.1, 10000,
                                        99, 4);
    EXPECT_NEAR(e.estimate, 0.5, 0.03);
    EXPECT_LE(e.lower, 0.5);
    EXPECT_GE(e.upper, 0.5);
}

TEST(WeakOpt, ErgodicConstantAgainstMeanOptimal)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    const auto e = weak_opt_probability(model, constant(0.33), of_kind(StrategyKind::MeanOptimalExact), loss, 10000,
                                        0.05, 100, 5, 4);
    EXPECT_GE(e.estimate, 0.95);
}

TEST(WeakOpt, ThreadCountDoesNotMatter)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    StrategySpec pf = of_kind(StrategyKind::MeanOptimalParticle);
    pf.particles = 10;
    const auto a = weak_opt_probability(model, pf, of_kind(StrategyKind::MeanOptimalExact), loss, 300, 0.005, 60, 3, 1);
    const auto b = weak_opt_probability(model, pf, of_kind(StrategyKind::MeanOptimalExact), loss, 300, 0.005, 60, 3, 7);
    EXPECT_EQ(a.successes, b.successes);
}

TEST(Wilson, ReferenceValues)
{
    const auto a = wilson_interval(5, 10);
    EXPECT_NEAR(a.lower, 0.2366, 1e-4);
    EXPECT_NEAR(a.upper, 0.7634, 1e-4);
    const auto b = wilson_interval(0, 10);
    EXPECT_EQ(b.lower, 0.0);
    EXPECT_NEAR(b.upper, 0.2775, 1e-4);
    const auto c = wilson_interval(81, 263);
    EXPECT_NEAR(c.lower, 0.2553, 1e-4);
    EXPECT_NEAR(c.upper, 0.3662, 1e-4);
}

TEST(ParallelFor, CoversEveryIndexOnce)
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 1000);
    EXPECT_EQ(*std::min_element(hits.begin(), hits.end()), 1);
}

// Mean over seeds of L_T(mean_optimal_exact) is at most any other strategy's mean plus 3 standard errors.
TEST(MeanOptimality, NoStrategyBeatsItOnAverage)
{
    const ProcessModel model(hmm_spec(Matrix{{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.05, 0.15, 0.8}},
                                      Matrix{{0.7, 0.2, 0.1}, {0.2, 0.6, 0.2}, {0.1, 0.2, 0.7}}));
    const LossFunction loss(quadratic_spec({0.0, 0.5, 1.0, 1.5, 2.0}));
    StrategySpec fw = of_kind(StrategyKind::FrozenWindow);
    fw.schedule = {2};
    StrategySpec pf = of_kind(StrategyKind::MeanOptimalParticle);
    pf.particles = 30;
    const std::vector<StrategySpec> others = {constant(0.5), constant(1.0), of_kind(StrategyKind::Parity), fw, pf};
    const std::size_t seeds = 200, horizon = 500;
    for (const auto& other : others) {
        std::vector<double> diff(seeds);
        parallel_for(seeds, 4, [&](std::size_t i) {
            const auto seed = derive_seed(31, i);
            diff[i] = time_average_loss(model, of_kind(StrategyKind::MeanOptimalExact), loss, horizon, seed).final_average()
                      - time_average_loss(model, other, loss, horizon, seed).final_average();
        });
        double mean = 0.0, var = 0.0;
        for (double d : diff)
            mean += d / seeds;
        for (double d : diff)
            var += (d - mean) * (d - mean) / (seeds - 1);
        EXPECT_LE(mean, 3.0 * std::sqrt(var / seeds)) << other.label();
    }
}

TEST(EstimateLstar, SpecExamples)
{
    const LossFunction coarse(quadratic_spec({0.0, 0.5, 1.0}));
    EXPECT_EQ(estimate_lstar(ProcessModel(kind_spec(ProcessKind::FlipFlop)), coarse, 1000, 3), 0.25);
    // perfect observations: E_pi[min_u l(u, X)], zero when the grid contains every state
    const ProcessModel perfect(hmm_spec(Matrix{{0.6, 0.4}, {0.3, 0.7}}, Matrix::identity(2)));
    EXPECT_EQ(estimate_lstar(perfect, coarse, 1000, 3), 0.0);
    const LossFunction offgrid(quadratic_spec({0.25, 0.5}));
    // min_u l(u, 0) = 1/16, min_u l(u, 1) = 1/4, weighted by pi = (3/7, 4/7)
    EXPECT_NEAR(estimate_lstar(perfect, offgrid, 200000, 3), 3.0 / 7.0 / 16.0 + 4.0 / 7.0 / 4.0, 0.005);
}

TEST(EstimateLstar, AgreesWithMeanOptimalLongRun)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const double a = estimate_lstar(model, loss, 100000, seed);
        const double b = time_average_loss(model, of_kind(StrategyKind::MeanOptimalExact), loss, 100000, seed)
                             .final_average();
        EXPECT_NEAR(a, b, 0.01);
    }
}

TEST(ConditionalMixing, FlipFlopDoesNotDecay)
{
    const ProcessModel model(kind_spec(ProcessKind::FlipFlop));
    const LossFunction loss(quadratic_spec({0.0, 1.0}));
    MixingRequest req;
    req.window = 64;
    req.max_lag = 50;
    req.windows = 10;
    const auto prof = conditional_mixing_profile(model, loss, req);
    ASSERT_EQ(prof.values.size(), 51u);
    for (double m : prof.values)
        EXPECT_NEAR(m, 0.25, 1e-9);
    EXPECT_EQ(prof.window, 64u);
    EXPECT_TRUE(std::isinf(prof.truncation));
}

TEST(ConditionalMixing, IidIsZero)
{
    // i.i.d. hidden states, blind
    const ProcessModel model(hmm_spec(Matrix{{0.3, 0.7}, {0.3, 0.7}}, Matrix{{1.0}, {1.0}}));
    const LossFunction loss(quadratic_spec({0.0, 0.5, 1.0}));
    MixingRequest req;
    req.window = 30;
    req.max_lag = 30;
    req.windows = 5;
    const auto prof = conditional_mixing_profile(model, loss, req);
    EXPECT_GT(prof.values[0], 0.0);
    for (std::size_t k = 1; k < prof.values.size(); ++k)
        EXPECT_NEAR(prof.values[k], 0.0, 1e-9);
}

TEST(ConditionalMixing, MatchesDefinitionOnSmallWindows)
{
    const auto hmm = make_finite_hmm(Matrix{{0.8, 0.2}, {0.3, 0.7}}, Matrix{{0.75, 0.25}, {0.2, 0.8}});
    const LossFunction loss(quadratic_spec({0.0, 0.4, 1.0}));
    for (const auto& w : oracle::all_sequences(5, 2)) {
        const auto got = conditional_mixing_window(hmm, loss, w, 4, std::numeric_limits<double>::infinity());
        const auto ref = brute_mixing(hmm, loss, w, 4);
        for (std::size_t k = 0; k <= 4; ++k)
            ASSERT_NEAR(got[k], ref[k], 1e-12);
    }
}

TEST(ConditionalMixing, TruncationZeroesLargeEnvelope)
{
    const auto hmm = make_finite_hmm(Matrix{{0.8, 0.2}, {0.3, 0.7}}, Matrix{{0.75, 0.25}, {0.2, 0.8}});
    const LossFunction loss(quadratic_spec({0.0, 1.0}));
    const std::vector<int> w{0, 1, 1, 0};
    // Lambda = 1 on both states, so M < 1 kills every loss value
    for (double m : conditional_mixing_window(hmm, loss, w, 3, 0.5))
        EXPECT_EQ(m, 0.0);
}

TEST(ConditionalMixing, ErgodicCesaroDecays)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    MixingRequest req;
    req.window = 256;
    req.max_lag = 200;
    req.windows = 30;
    req.seed = 4;
    const auto prof = conditional_mixing_profile(model, loss, req);
    EXPECT_LT(prof.cesaro[200], 0.2 * prof.values[0]);
    for (double m : prof.values)
        EXPECT_GE(m, 0.0);
    EXPECT_THROW(conditional_mixing_profile(model, loss, MixingRequest{10, std::numeric_limits<double>::infinity(), 11, 1, 0}),
                 std::invalid_argument);
}

TEST(ConditionalMixing, RelabelingInvariance)
{
    const auto hmm = make_finite_hmm(Matrix{{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.2, 0.2, 0.6}},
                                     Matrix{{0.6, 0.4}, {0.3, 0.7}, {0.5, 0.5}});
    const std::vector<std::size_t> perm{2, 0, 1};
    const auto relabeled = permuted(hmm, perm);
    LossSpec ls = quadratic_spec({0.0, 0.5, 1.0, 2.0});
    ls.feature.kind = FeatureSpec::Kind::Table;
    ls.feature.table = {0.0, 1.0, 3.0};
    LossSpec lp = ls;
    for (std::size_t i = 0; i < 3; ++i)
        lp.feature.table[perm[i]] = ls.feature.table[i];
    const LossFunction a(ls), b(lp);
    CounterRng rng(8);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> w(20);
        for (auto& y : w)
            y = rng.bit();
        const auto ma = conditional_mixing_window(hmm, a, w, 10, std::numeric_limits<double>::infinity());
        const auto mb = conditional_mixing_window(relabeled, b, w, 10, std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k <= 10; ++k)
            EXPECT_NEAR(ma[k], mb[k], 1e-12);
    }
    const auto ba = beta_mixing_profile(hmm, 15);
    const auto bb = beta_mixing_profile(relabeled, 15);
    for (std::size_t n = 0; n < 15; ++n)
        EXPECT_NEAR(ba[n], bb[n], 1e-12);
}

TEST(BetaMixing, SpecExamples)
{
    for (double b : beta_mixing_profile(make_finite_hmm(Matrix{{0.3, 0.7}, {0.3, 0.7}}, Matrix{{1.0}, {1.0}}), 10))
        EXPECT_NEAR(b, 0.0, 1e-15);
    for (double b : beta_mixing_profile(make_finite_hmm(Matrix{{0.0, 1.0}, {1.0, 0.0}}, Matrix{{1.0}, {1.0}}), 10))
        EXPECT_NEAR(b, 0.5, 1e-15);
}

TEST(BetaMixing, TwoStateRatioIsSecondEigenvalue)
{
    for (const auto& [p, q] : std::vector<std::pair<double, double>>{{0.05, 0.1}, {0.3, 0.2}, {0.7, 0.9}, {0.5, 0.25}}) {
        const Matrix m{{1 - p, p}, {q, 1 - q}};
        Eigen::Matrix2d e;
        e << 1 - p, p, q, 1 - q;
        const auto ev = e.eigenvalues();
        const double lambda2 = std::min(std::abs(ev(0)), std::abs(ev(1)));
        const auto beta = beta_mixing_profile(make_finite_hmm(m, Matrix{{1.0}, {1.0}}), 20);
        for (std::size_t n = 0; n + 1 < beta.size(); ++n) {
            if (beta[n] < 1e-200)
                break;
            EXPECT_NEAR(beta[n + 1] / beta[n], lambda2, 1e-9) << "p=" << p << " q=" << q << " n=" << n + 1;
        }
    }
}

TEST(ParticleDiagnostics, Ranges)
{
    const ProcessModel model(ergodic2());
    const LossFunction loss(fine_quadratic());
    const auto small = particle_diagnostics(model, loss, 10, 100, 1);
    const auto big = particle_diagnostics(model, loss, 20000, 100, 1);
    EXPECT_GE(small.mean_tv, 0.0);
    EXPECT_LE(small.mean_tv, 1.0);
    EXPECT_LT(big.mean_tv, small.mean_tv);
    EXPECT_GE(big.disagreement, 0.0);
    EXPECT_LE(small.disagreement, 1.0);
}

TEST(BatchMeans, Basic)
{
    const std::vector<double> flat(1000, 2.0);
    EXPECT_EQ(batch_means_stderr(flat, 10), 0.0);
    CounterRng rng(3);
    std::vector<double> iid(100000);
    for (auto& v : iid)
        v = rng.uniform();
    // sd of the mean is 1/sqrt(12 n)
    EXPECT_NEAR(batch_means_stderr(iid, 100), 1.0 / std::sqrt(12.0 * iid.size()), 0.3 / std::sqrt(12.0 * iid.size()));
}

// Runs the two block look-ahead strategies on every configuration of the bits they read.
TEST(BlockLookahead, EnumerationOracleMatchesStrategies)
{
    for (int n : {2, 3, 4}) {
        const std::size_t horizon = (std::size_t{1} << n) - 1;
        LossSpec ls;
        ls.kind = LossKind::LookaheadIndex;
        ls.grid.kind = GridSpec::Kind::Integers;
        ls.grid.lo = 0;
        ls.grid.hi = std::int64_t{1} << (n + 1);
        const LossFunction loss(ls);
        const ProcessModel model(kind_spec(ProcessKind::LookaheadIID));
        StrategySpec s0 = of_kind(StrategyKind::BlockLookahead), s1 = s0;
        s1.shift = 1;
        auto u0 = make_strategy(s0, model, loss);
        auto u1 = make_strategy(s1, model, loss);
        Path path = model.sample_path(horizon, 0, loss.window().future);
        // positions read are 2^1 .. 2^{n+1}
        const std::size_t bits = static_cast<std::size_t>(n) + 1;
        double total = 0.0;
        for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
            std::fill(path.x.begin(), path.x.end(), 0);
            for (std::size_t j = 0; j < bits; ++j)
                path.x[std::size_t{2} << j] = (code >> j) & 1U;
            total += std::min(run_strategy(*u0, loss, path).final_average(),
                              run_strategy(*u1, loss, path).final_average());
        }
        EXPECT_NEAR(total / static_cast<double>(std::uint64_t{1} << bits), expected_min_block_lookahead(n), 1e-12)
            << "n=" << n;
    }
    EXPECT_LT(expected_min_block_lookahead(12), 0.5);
}
