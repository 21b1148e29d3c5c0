#include "pathopt/registry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "pathopt/rng.hpp"

namespace pathopt {

namespace {

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string fmt4(double v) { return fmt("%.4f", v); }

StrategySpec constant(double v)
{
    StrategySpec s;
    s.kind = StrategyKind::Constant;
    s.value = v;
    return s;
}

StrategySpec simple(StrategyKind kind)
{
    StrategySpec s;
    s.kind = kind;
    return s;
}

StrategySpec shifted(StrategyKind kind, int r)
{
    StrategySpec s;
    s.kind = kind;
    s.shift = r;
    return s;
}

StrategySpec frozen(std::vector<std::size_t> schedule)
{
    StrategySpec s;
    s.kind = StrategyKind::FrozenWindow;
    s.schedule = std::move(schedule);
    return s;
}

StrategySpec particle(std::size_t n)
{
    StrategySpec s;
    s.kind = StrategyKind::MeanOptimalParticle;
    s.particles = n;
    return s;
}

GridSpec values_grid(std::vector<double> v)
{
    GridSpec g;
    g.kind = GridSpec::Kind::Values;
    g.values = std::move(v);
    return g;
}

GridSpec integer_grid(std::int64_t lo, std::int64_t hi)
{
    GridSpec g;
    g.kind = GridSpec::Kind::Integers;
    g.lo = lo;
    g.hi = hi;
    return g;
}

ExperimentConfig example_1_2()
{
    ExperimentConfig c;
    c.name = "example-1.2";
    c.model.kind = ProcessKind::FlipFlop;
    c.loss.kind = LossKind::Quadratic;
    c.loss.grid = values_grid({0.0, 0.5, 1.0});
    c.strategies = {constant(0.5), simple(StrategyKind::Alternating), simple(StrategyKind::MeanOptimalExact)};
    c.reference = "mean_optimal_exact";
    c.horizon = 1000;
    c.checkpoints = {1, 10, 100};
    c.seeds = 10000;
    c.master_seed = 12;
    c.epsilons = {0.1};
    c.batches = 10;
    c.lstar = true;
    c.mixing = MixingDiagnostic{64, std::numeric_limits<double>::infinity(), 50, 20};
    c.output = "out/example-1.2";
    return c;
}

ExperimentConfig example_1_3()
{
    ExperimentConfig c;
    c.name = "example-1.3";
    c.model.kind = ProcessKind::XorPair;
    c.loss.kind = LossKind::Quadratic;
    c.loss.feature.kind = FeatureSpec::Kind::PairFirst;
    c.loss.grid = values_grid({0.0, 0.5, 1.0});
    c.strategies = {simple(StrategyKind::Parity), constant(0.5), simple(StrategyKind::MeanOptimalExact)};
    c.reference = "mean_optimal_exact";
    c.horizon = 1000;
    c.checkpoints = {1, 10, 100};
    c.seeds = 10000;
    c.master_seed = 13;
    c.epsilons = {0.1};
    c.batches = 10;
    c.output = "out/example-1.3";
    return c;
}

constexpr int kExample24MaxDelay = 8;

ExperimentConfig example_2_4()
{
    ExperimentConfig c;
    c.name = "example-2.4";
    c.model.kind = ProcessKind::BinaryExpansion;
    c.model.bit_depth = 32;
    c.model.max_delay = kExample24MaxDelay;
    c.loss.kind = LossKind::BitLoss;
    c.horizon = 1000;
    c.loss.grid = integer_grid(1, static_cast<std::int64_t>(c.horizon) + kExample24MaxDelay);
    c.strategies = {constant(1), constant(7), shifted(StrategyKind::DelayShift, 0),
                    shifted(StrategyKind::DelayShift, 3), shifted(StrategyKind::DelayShift, 7)};
    c.checkpoints = {1, 10, 100};
    c.seeds = 2000;
    c.master_seed = 24;
    c.output = "out/example-2.4";
    return c;
}

constexpr int kExample25Level = 12;

ExperimentConfig example_2_5()
{
    ExperimentConfig c;
    c.name = "example-2.5";
    c.model.kind = ProcessKind::LookaheadIID;
    c.loss.kind = LossKind::LookaheadIndex;
    c.loss.grid = integer_grid(0, std::int64_t{1} << (kExample25Level + 1));
    c.strategies = {shifted(StrategyKind::BlockLookahead, 0), shifted(StrategyKind::BlockLookahead, 1)};
    c.horizon = (std::size_t{1} << kExample25Level) - 1;
    c.checkpoints = {1, 3, 7, 15, 31, 63, 127, 255, 511, 1023, 2047};
    c.seeds = 5000;
    c.master_seed = 25;
    c.output = "out/example-2.5";
    return c;
}

ExperimentConfig hmm_filter_optimality()
{
    ExperimentConfig c;
    c.name = "hmm-filter-optimality";
    c.model.kind = ProcessKind::FiniteHMM;
    c.model.transition = Matrix{{0.95, 0.05}, {0.1, 0.9}};
    c.model.emission = Matrix{{0.8, 0.2}, {0.3, 0.7}};
    c.loss.kind = LossKind::Quadratic;
    c.loss.grid.kind = GridSpec::Kind::Range;
    c.loss.grid.start = 0.0;
    c.loss.grid.stop = 1.0;
    c.loss.grid.step = 0.01;
    c.strategies = {simple(StrategyKind::MeanOptimalExact), constant(0.33), frozen({1}), frozen({4}),
                    particle(20)};
    c.reference = "mean_optimal_exact";
    c.horizon = 100000;
    c.checkpoints = {10, 100, 1000, 10000};
    c.seeds = 50;
    c.master_seed = 33;
    c.epsilons = {0.01};
    c.batches = 100;
    c.lstar = true;
    c.mixing = MixingDiagnostic{256, std::numeric_limits<double>::infinity(), 200, 50};
    c.beta_max_lag = 20;
    c.output = "out/hmm-filter-optimality";
    return c;
}

ExperimentConfig particle_approx()
{
    ExperimentConfig c;
    c.name = "particle-approx";
    c.model.kind = ProcessKind::FiniteHMM;
    c.model.transition = Matrix{{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.05, 0.15, 0.8}};
    c.model.emission = Matrix{{0.7, 0.2, 0.1}, {0.2, 0.6, 0.2}, {0.1, 0.2, 0.7}};
    c.loss.kind = LossKind::Quadratic;
    c.loss.grid = values_grid({0.0, 0.5, 1.0, 1.5, 2.0});
    c.strategies = {simple(StrategyKind::MeanOptimalExact), particle(100), particle(10000)};
    c.reference = "mean_optimal_exact";
    c.horizon = 200;
    c.seeds = 20;
    c.master_seed = 34;
    c.epsilons = {0.01};
    c.batches = 10;
    c.particles = {ParticleDiagnostic{{100, 1000, 10000, 100000}, 200, 20}};
    c.output = "out/particle-approx";
    return c;
}

const std::map<std::string, ExperimentConfig (*)()>& builders()
{
    static const std::map<std::string, ExperimentConfig (*)()> table = {
        {"example-1.2", example_1_2},
        {"example-1.3", example_1_3},
        {"example-2.4", example_2_4},
        {"example-2.5", example_2_5},
        {"hmm-filter-optimality", hmm_filter_optimality},
        {"particle-approx", particle_approx},
    };
    return table;
}

std::string names_list()
{
    std::string s;
    for (const auto& n : experiment_names())
        s += (s.empty() ? "" : ", ") + n;
    return s;
}

CheckResult check(std::string name, std::string expected, std::string observed, bool passed)
{
    return {std::move(name), std::move(expected), std::move(observed), passed};
}

// L_T equals `value` for every seed and every checkpoint.
CheckResult exact_everywhere(const RunReport& r, const std::string& label, double value)
{
    std::size_t bad = 0, total = 0;
    for (const auto& row : r.trajectories)
        if (row.strategy == label) {
            ++total;
            if (row.value != value)
                ++bad;
        }
    return check("L_T(" + label + ") exact at every checkpoint", "= " + fmt4(value) + " on all rows",
                 std::to_string(total - bad) + "/" + std::to_string(total) + " rows", bad == 0 && total > 0);
}

CheckResult two_point(const RunReport& r, const std::string& label)
{
    std::size_t bad = 0;
    const auto finals = r.final_losses(label);
    for (double v : finals)
        if (v != 0.0 && v != 1.0)
            ++bad;
    return check("L_T(" + label + ") in {0, 1} per path", "all paths",
                 std::to_string(finals.size() - bad) + "/" + std::to_string(finals.size()), bad == 0);
}

CheckResult zero_fraction(const RunReport& r, const std::string& label)
{
    const auto finals = r.final_losses(label);
    const auto zeros = static_cast<double>(std::count(finals.begin(), finals.end(), 0.0));
    const double frac = zeros / static_cast<double>(finals.size());
    return check("fraction of paths with L_T(" + label + ") = 0", "0.5 +- 0.03", fmt4(frac),
                 std::abs(frac - 0.5) <= 0.03);
}

std::vector<CheckResult> checks_1_2(const RunReport& r)
{
    std::vector<CheckResult> out;
    out.push_back(exact_everywhere(r, "constant(0.5)", 0.25));
    out.push_back(exact_everywhere(r, "mean_optimal_exact", 0.25));
    out.push_back(two_point(r, "alternating"));
    out.push_back(zero_fraction(r, "alternating"));
    {
        const bool ok = !r.lstar.empty() && std::all_of(r.lstar.begin(), r.lstar.end(), [](double v) { return v == 0.25; });
        out.push_back(check("L* estimate per path", "= 0.2500", ok ? "0.2500 on all paths" : "differs", ok));
    }
    {
        const auto m = r.profile("conditional_mixing");
        double worst = 0.0;
        for (double v : m)
            worst = std::max(worst, std::abs(v - 0.25));
        out.push_back(check("conditional mixing m_k, k <= 50", "0.25 within 1e-9",
                            "max deviation " + fmt("%.3g", worst), !m.empty() && worst <= 1e-9));
    }
    out.push_back(check("wall clock", "< 10 s", fmt("%.2f s", r.wall_clock_seconds), r.wall_clock_seconds < 10.0));
    return out;
}

std::vector<CheckResult> checks_1_3(const RunReport& r)
{
    std::vector<CheckResult> out;
    out.push_back(exact_everywhere(r, "constant(0.5)", 0.25));
    out.push_back(exact_everywhere(r, "mean_optimal_exact", 0.25));
    out.push_back(two_point(r, "parity"));
    out.push_back(zero_fraction(r, "parity"));
    for (const auto& s : r.summaries)
        if (s.label == "parity")
            for (const auto& w : s.weak_opt)
                out.push_back(check("P[L_T(parity) - L_T(mean_optimal_exact) >= -" + fmt("%g", w.epsilon) + "]",
                                    "0.5 +- 0.03", fmt4(w.estimate.estimate),
                                    std::abs(w.estimate.estimate - 0.5) <= 0.03));
    const auto parity = r.final_losses("parity");
    const auto ref = r.final_losses("mean_optimal_exact");
    std::size_t better = 0, worse = 0;
    for (std::size_t i = 0; i < parity.size(); ++i) {
        better += parity[i] < ref[i];
        worse += parity[i] > ref[i];
    }
    out.push_back(check("dominance fails in both directions", "parity better on some paths and worse on others",
                        std::to_string(better) + " better, " + std::to_string(worse) + " worse",
                        better > 0 && worse > 0));
    return out;
}

std::vector<CheckResult> checks_2_4(const RunReport& r)
{
    std::vector<CheckResult> out;
    for (const auto& s : r.summaries) {
        const double se = s.final_loss.stderr_mean;
        out.push_back(check("mean L_T(" + s.label + ")", "0.5 +- 0.03",
                            fmt4(s.final_loss.mean) + " (se " + fmt4(se) + ")",
                            std::abs(s.final_loss.mean - 0.5) <= 0.03));
    }
    const ProcessModel model(r.config.model);
    const LossFunction loss(r.config.loss);
    for (const auto& spec : r.config.strategies) {
        if (spec.kind != StrategyKind::DelayShift)
            continue;
        const auto label = spec.label();
        std::size_t bad = 0;
        for (std::size_t i = 0; i < r.config.seeds; ++i) {
            const Path path = sample_for_loss(model, loss, r.config.horizon, derive_seed(r.config.master_seed, i));
            const double eps = static_cast<double>(path.noise.at(1 - spec.shift));
            for (const auto& row : r.trajectories)
                if (row.seed == i && row.strategy == label && row.value != eps)
                    ++bad;
        }
        out.push_back(check("L_T(" + label + ") = eps_{1-r} at every checkpoint", "exact on all paths",
                            std::to_string(bad) + " mismatches", bad == 0));
    }
    return out;
}

std::vector<CheckResult> checks_2_5(const RunReport& r)
{
    std::vector<CheckResult> out;
    const auto a = r.final_losses(r.labels.at(0));
    const auto b = r.final_losses(r.labels.at(1));
    std::vector<double> mins(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        mins[i] = std::min(a[i], b[i]);
    const auto s = summarize(mins);
    const double oracle = expected_min_block_lookahead(kExample25Level);
    out.push_back(check("mean min(L_T(u0), L_T(u1))", "< 0.5 - 3 se",
                        fmt4(s.mean) + " (se " + fmt("%.5f", s.stderr_mean) + ")",
                        s.mean < 0.5 - 3.0 * s.stderr_mean));
    out.push_back(check("agreement with enumeration oracle", "|mean - " + fmt4(oracle) + "| <= 3 se",
                        fmt("%.5f", std::abs(s.mean - oracle)), std::abs(s.mean - oracle) <= 3.0 * s.stderr_mean));
    return out;
}

std::vector<CheckResult> checks_hmm(const RunReport& r)
{
    std::vector<CheckResult> out;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_strategy;
    double worst_z = -std::numeric_limits<double>::infinity();
    for (const auto& g : r.regrets) {
        auto& [ok, total] = per_strategy[g.strategy];
        ++total;
        if (g.difference >= -2.0 * g.stderr_diff)
            ++ok;
        if (g.stderr_diff > 0)
            worst_z = std::max(worst_z, -g.difference / g.stderr_diff);
    }
    for (const auto& [label, counts] : per_strategy)
        out.push_back(check("L_T(mean_optimal_exact) <= L_T(" + label + ") + 2 se per path", "all paths",
                            std::to_string(counts.first) + "/" + std::to_string(counts.second),
                            counts.first == counts.second));
    {
        const auto ref = r.final_losses(r.config.reference);
        double worst = 0.0;
        for (std::size_t i = 0; i < ref.size() && i < r.lstar.size(); ++i)
            worst = std::max(worst, std::abs(ref[i] - r.lstar[i]));
        out.push_back(check("|L* estimate - L_T(mean_optimal_exact)| per path", "<= 0.01", fmt("%.5f", worst),
                            !r.lstar.empty() && worst <= 0.01));
    }
    {
        const auto m = r.profile("conditional_mixing");
        const auto c = r.profile("conditional_mixing_cesaro");
        const bool ok = !m.empty() && !c.empty() && c.back() < 0.2 * m.front();
        out.push_back(check("Cesaro mean of m_k at K = " + std::to_string(c.empty() ? 0 : c.size() - 1),
                            "< 0.2 m_0 = " + fmt("%.5f", m.empty() ? 0.0 : 0.2 * m.front()),
                            fmt("%.5f", c.empty() ? 0.0 : c.back()), ok));
    }
    {
        const auto beta = r.profile("beta_mixing");
        const auto& P = r.config.model.transition;
        const double expected = std::abs(1.0 - P(0, 1) - P(1, 0));
        double worst = 0.0;
        for (std::size_t n = 0; n + 1 < beta.size(); ++n)
            worst = std::max(worst, std::abs(beta[n + 1] / beta[n] - expected));
        out.push_back(check("beta(n+1)/beta(n)", "|1-p-q| = " + fmt4(expected) + " within 1e-9",
                            "max deviation " + fmt("%.3g", worst), beta.size() > 1 && worst <= 1e-9));
    }
    return out;
}

std::vector<CheckResult> checks_particle(const RunReport& r)
{
    std::vector<CheckResult> out;
    const std::string tv_kind = "particle_tv_T200";
    std::vector<std::pair<std::size_t, double>> tv;
    std::map<std::size_t, double> dis;
    for (const auto& p : r.profiles) {
        if (p.kind == tv_kind)
            tv.emplace_back(p.index, p.value);
        if (p.kind == "particle_disagreement_T200")
            dis[p.index] = p.value;
    }
    bool monotone = tv.size() >= 3;
    std::string observed;
    for (std::size_t i = 0; i < tv.size(); ++i) {
        observed += (i ? ", " : "") + std::string("N=") + std::to_string(tv[i].first) + ": " + fmt("%.5f", tv[i].second);
        if (i > 0 && tv[i].first <= 10000 && !(tv[i].second < tv[i - 1].second))
            monotone = false;
    }
    out.push_back(check("mean TV decreasing over N = 1e2, 1e3, 1e4", "strictly decreasing", observed, monotone));
    const auto it = std::find_if(tv.begin(), tv.end(), [](const auto& p) { return p.first == 100000; });
    out.push_back(check("mean TV at N = 1e5, T = 200", "< 0.02",
                        it == tv.end() ? "missing" : fmt("%.5f", it->second), it != tv.end() && it->second < 0.02));
    const auto d = dis.find(10000);
    out.push_back(check("decision disagreement at N = 1e4", "< 0.05",
                        d == dis.end() ? "missing" : fmt("%.5f", d->second), d != dis.end() && d->second < 0.05));
    return out;
}

} // namespace

UnknownExperiment::UnknownExperiment(const std::string& name)
    : std::invalid_argument("unknown experiment '" + name + "'; valid names: " + names_list())
{
}

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = {"example-1.2", "example-1.3",           "example-2.4",
                                                   "example-2.5", "hmm-filter-optimality", "particle-approx"};
    return names;
}

ExperimentConfig registered_config(const std::string& name)
{
    const auto it = builders().find(name);
    if (it == builders().end())
        throw UnknownExperiment(name);
    return it->second();
}

std::vector<CheckResult> run_checks(const std::string& name, const RunReport& report)
{
    if (name == "example-1.2")
        return checks_1_2(report);
    if (name == "example-1.3")
        return checks_1_3(report);
    if (name == "example-2.4")
        return checks_2_4(report);
    if (name == "example-2.5")
        return checks_2_5(report);
    if (name == "hmm-filter-optimality")
        return checks_hmm(report);
    if (name == "particle-approx")
        return checks_particle(report);
    throw UnknownExperiment(name);
}

RunReport reproduce(const std::string& name, unsigned threads, std::optional<std::uint64_t> master_seed)
{
    auto config = registered_config(name);
    if (master_seed)
        config.master_seed = *master_seed;
    auto report = run_experiment(config, threads);
    report.checks = run_checks(name, report);
    return report;
}

std::string format_checks(const std::vector<CheckResult>& checks)
{
    std::size_t w0 = 5, w1 = 8;
    for (const auto& c : checks) {
        w0 = std::max(w0, c.name.size());
        w1 = std::max(w1, c.expected.size());
    }
    const auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    std::string out = pad("check", w0) + "  " + pad("expected", w1) + "  result  observed\n";
    for (const auto& c : checks)
        out += pad(c.name, w0) + "  " + pad(c.expected, w1) + "  " + (c.passed ? "PASS  " : "FAIL  ") + "  " +
               c.observed + "\n";
    return out;
}

} // namespace pathopt
