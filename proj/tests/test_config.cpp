#include <gtest/gtest.h>

#include <cmath>

#include "pathopt/config.hpp"
#include "pathopt/registry.hpp"
#include "pathopt/rng.hpp"

using namespace pathopt;

namespace {

const char* kMinimal = R"(name: minimal
model:
  kind: flip_flop
loss:
  kind: quadratic
  grid:
    values: [0, 0.5, 1]
strategies:
  - kind: constant
    value: 0.5
  - kind: alternating
horizon: 100
seeds: 4
)";

std::string with(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

ConfigError parse_error(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return ConfigError(0, "", "");
}

ExperimentConfig random_config(CounterRng& rng)
{
    ExperimentConfig c;
    c.name = "random-" + std::to_string(rng.next_u64() % 1000);
    const bool hmm = rng.bit();
    if (hmm) {
        c.model.kind = ProcessKind::FiniteHMM;
        const double p = rng.uniform(), q = rng.uniform() * 0.3 + 0.1;
        c.model.transition = Matrix{{1 - p, p}, {q, 1 - q}};
        const double e = rng.uniform() / 3.0;
        c.model.emission = Matrix{{1 - e, e}, {e / 7.0, 1 - e / 7.0}};
        c.loss.feature.kind = FeatureSpec::Kind::Table;
        c.loss.feature.table = {rng.uniform(), 1.0 / 3.0};
    } else {
        c.model.kind = ProcessKind::BinaryExpansion;
        c.model.bit_depth = 1 + static_cast<int>(rng.next_u64() % 63);
        c.model.max_delay = static_cast<int>(rng.next_u64() % 10);
        c.loss.feature.kind = FeatureSpec::Kind::Dyadic;
        c.loss.feature.bit_depth = c.model.bit_depth;
    }
    c.loss.kind = rng.bit() ? LossKind::Quadratic : LossKind::LpPrediction;
    c.loss.exponent = 1.0 + rng.uniform();
    c.loss.width = rng.uniform();
    if (rng.bit()) {
        c.loss.grid.kind = GridSpec::Kind::Range;
        c.loss.grid.start = -rng.uniform();
        c.loss.grid.stop = 1.0 + rng.uniform();
        c.loss.grid.step = 0.1 + rng.uniform() * 0.01;
    } else {
        c.loss.grid.kind = GridSpec::Kind::Values;
        for (int i = 0; i < 5; ++i)
            c.loss.grid.values.push_back(rng.uniform() * 1e-3 + i);
    }
    StrategySpec s;
    s.kind = StrategyKind::Constant;
    s.value = rng.uniform();
    c.strategies.push_back(s);
    StrategySpec m;
    m.kind = StrategyKind::MeanOptimalParticle;
    m.particles = 1 + rng.next_u64() % 5000;
    m.seed = rng.next_u64();
    m.name = "pf";
    c.strategies.push_back(m);
    if (hmm) {
        StrategySpec f;
        f.kind = StrategyKind::FrozenWindow;
        f.schedule = {1, 3, 9};
        c.strategies.push_back(f);
        c.lstar = rng.bit();
        MixingDiagnostic md;
        md.window = 10;
        md.max_lag = 5;
        md.truncation = rng.bit() ? std::numeric_limits<double>::infinity() : rng.uniform() * 10.0;
        c.mixing = md;
        c.beta_max_lag = 1 + rng.next_u64() % 30;
        c.particles.push_back(ParticleDiagnostic{{10, 100}, 50, 3});
    }
    c.reference = "pf";
    c.horizon = 1 + rng.next_u64() % 100000;
    c.checkpoints = {1, 10};
    c.seeds = 1 + rng.next_u64() % 100;
    c.master_seed = rng.next_u64();
    c.epsilons = {rng.uniform() + 1e-9, 0.1};
    c.batches = 2 + rng.next_u64() % 200;
    c.output = "dir/out";
    return c;
}

} // namespace

TEST(Config, ParsesMinimal)
{
    const auto c = parse_config(kMinimal);
    EXPECT_EQ(c.name, "minimal");
    EXPECT_EQ(c.model.kind, ProcessKind::FlipFlop);
    ASSERT_EQ(c.strategies.size(), 2u);
    EXPECT_EQ(c.strategies[0].value, 0.5);
    EXPECT_EQ(c.horizon, 100u);
    EXPECT_EQ(c.seeds, 4u);
    EXPECT_EQ(c.effective_checkpoints(), std::vector<std::size_t>{100});
    EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, RoundTripRandom)
{
    CounterRng rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto c = random_config(rng);
        const auto text = serialize_config(c);
        ExperimentConfig back;
        ASSERT_NO_THROW(back = parse_config(text)) << text;
        EXPECT_TRUE(back == c) << text;
        EXPECT_EQ(serialize_config(back), text);
    }
}

TEST(Config, RoundTripRegistered)
{
    for (const auto& name : experiment_names()) {
        const auto c = registered_config(name);
        EXPECT_TRUE(parse_config(serialize_config(c)) == c) << name;
        EXPECT_NO_THROW(validate_config(c)) << name;
    }
}

TEST(Config, HorizonZero)
{
    const auto e = parse_error(with(kMinimal, "horizon: 100", "horizon: 0"));
    EXPECT_EQ(e.field(), "horizon");
    EXPECT_EQ(e.line(), 12u);
    EXPECT_NE(std::string(e.what()).find("horizon must be ≥ 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 12"), std::string::npos);
}

TEST(Config, ErrorsNameFieldAndLine)
{
    struct Case {
        std::string from, to, field;
        std::size_t line;
    };
    const std::vector<Case> cases = {
        {"seeds: 4", "seeds: 0", "seeds", 13},
        {"kind: flip_flop", "kind: flop", "model.kind", 3},
        {"kind: quadratic", "kind: cubic", "loss.kind", 5},
        {"values: [0, 0.5, 1]", "values: zero", "loss.grid.values", 7},
        {"  - kind: alternating", "  - kind: alternating\n    shfit: 2", "strategies[1].shfit", 12},
        {"seeds: 4", "seeds: 4\nbogus: 1", "bogus", 14},
        {"seeds: 4", "seeds: 4\nreference: nobody", "reference", 14},
        {"seeds: 4", "seeds: 4\nepsilons: [0.1, -1]", "epsilons[1]", 14},
        {"seeds: 4", "seeds: 4\nbatches: 1", "batches", 14},
        {"value: 0.5", "value: half", "strategies[0].value", 10},
        {"  - kind: alternating", "  - kind: constant\n    value: 0.5", "strategies[1]", 11},
    };
    for (const auto& c : cases) {
        const auto e = parse_error(with(kMinimal, c.from, c.to));
        EXPECT_EQ(e.field(), c.field) << c.to << ": " << e.what();
        EXPECT_EQ(e.line(), c.line) << c.to << ": " << e.what();
    }
}

TEST(Config, ValidationCatchesSemanticErrors)
{
    auto c = parse_config(kMinimal);
    c.loss.kind = LossKind::BitLoss;
    c.loss.grid.kind = GridSpec::Kind::Integers;
    c.loss.grid.lo = 1;
    c.loss.grid.hi = 4;
    EXPECT_THROW(validate_config(c), ConfigError);

    auto d = parse_config(with(kMinimal, "seeds: 4", "seeds: 4\ndiagnostics:\n  lstar: true"));
    EXPECT_NO_THROW(validate_config(d));
    d.model.kind = ProcessKind::BinaryExpansion;
    d.loss.feature.kind = FeatureSpec::Kind::Dyadic;
    EXPECT_THROW(validate_config(d), ConfigError);

    auto bad = parse_config(with(kMinimal, "kind: flip_flop", "kind: finite_hmm\n  transition: [[0.5, 0.6], [0.5, 0.5]]\n  emission: [[1], [1]]"));
    try {
        validate_config(bad);
        ADD_FAILURE();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "model");
        EXPECT_NE(std::string(e.what()).find("stochastic"), std::string::npos);
    }
}

TEST(Config, InfiniteTruncation)
{
    const auto c = parse_config(with(kMinimal, "seeds: 4",
                                     "seeds: 4\ndiagnostics:\n  conditional_mixing:\n    window: 8\n    truncation: inf\n    max_lag: 4"));
    ASSERT_TRUE(c.mixing.has_value());
    EXPECT_TRUE(std::isinf(c.mixing->truncation));
    EXPECT_EQ(c.mixing->window, 8u);
    const auto e = parse_error(with(kMinimal, "seeds: 4",
                                    "seeds: 4\ndiagnostics:\n  conditional_mixing:\n    window: 8\n    max_lag: 9"));
    EXPECT_EQ(e.field(), "diagnostics.conditional_mixing.max_lag");
}

TEST(Config, YamlSyntaxError)
{
    const auto e = parse_error("name: [unterminated\nhorizon: 3\n");
    EXPECT_GE(e.line(), 1u);
}

TEST(Config, MissingFile)
{
    EXPECT_THROW(load_config("/nonexistent/config.yaml"), ConfigError);
}
