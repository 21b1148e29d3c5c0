#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pathopt/errors.hpp"
#include "pathopt/experiment.hpp"
#include "pathopt/registry.hpp"

using namespace pathopt;

namespace {

ExperimentConfig minimal()
{
    return parse_config(R"(name: minimal
model: {kind: flip_flop}
loss:
  kind: quadratic
  grid: {values: [0, 0.5, 1]}
strategies:
  - {kind: constant, value: 0.5}
  - {kind: alternating}
  - {kind: mean_optimal_exact}
reference: mean_optimal_exact
horizon: 100
checkpoints: [1, 10]
seeds: 50
master_seed: 9
epsilons: [0.1, 0.5]
batches: 10
)");
}

ExperimentConfig small_hmm()
{
    return parse_config(R"(name: small-hmm
model:
  kind: finite_hmm
  transition: [[0.9, 0.1], [0.2, 0.8]]
  emission: [[0.8, 0.2], [0.3, 0.7]]
loss:
  kind: quadratic
  grid: {range: {start: 0, stop: 1, step: 0.1}}
strategies:
  - {kind: mean_optimal_exact}
  - {kind: mean_optimal_particle, particles: 20}
  - {kind: frozen_window, schedule: [1, 4]}
reference: mean_optimal_exact
horizon: 400
checkpoints: [1, 100]
seeds: 12
master_seed: 3
epsilons: [0.01]
batches: 20
diagnostics:
  lstar: true
  conditional_mixing: {window: 16, max_lag: 8, windows: 5}
  beta_mixing: {max_lag: 5}
  particles:
    - {counts: [10, 100], horizon: 30, seeds: 3}
)");
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Experiment, MinimalFlipFlop)
{
    const auto r = run_experiment(minimal());
    EXPECT_EQ(r.labels, (std::vector<std::string>{"constant(0.5)", "alternating", "mean_optimal_exact"}));
    EXPECT_EQ(r.checkpoints, (std::vector<std::size_t>{1, 10, 100}));
    ASSERT_EQ(r.trajectories.size(), 50u * 3u * 3u);
    for (const auto& row : r.trajectories) {
        if (row.strategy != "alternating")
            EXPECT_EQ(row.value, 0.25);
        else
            EXPECT_TRUE(row.value == 0.0 || row.value == 1.0);
    }
    EXPECT_EQ(r.summaries[0].final_loss.mean, 0.25);
    EXPECT_EQ(r.summaries[0].final_loss.stderr_mean, 0.0);
    // constant(0.5) ties the reference, so it is weakly optimal on every path
    EXPECT_EQ(r.summaries[0].weak_opt[0].estimate.estimate, 1.0);
    EXPECT_TRUE(r.summaries[2].weak_opt.empty());
    ASSERT_EQ(r.regrets.size(), 50u * 2u);
    for (const auto& g : r.regrets) {
        if (g.strategy == "constant(0.5)")
            EXPECT_EQ(g.difference, 0.0);
    }
}

TEST(Experiment, RowOrdering)
{
    const auto r = run_experiment(minimal());
    std::size_t i = 0;
    for (std::size_t s = 0; s < 50; ++s)
        for (const auto& label : r.labels)
            for (std::size_t t : r.checkpoints) {
                const auto& row = r.trajectories[i++];
                ASSERT_EQ(row.seed, s);
                ASSERT_EQ(row.strategy, label);
                ASSERT_EQ(row.horizon, t);
            }
}

TEST(Experiment, ReportIsRecomputableFromCsv)
{
    const auto r = run_experiment(small_hmm(), 3);
    const auto rows = parse_trajectories_csv(trajectories_csv(r));
    ASSERT_EQ(rows.size(), r.trajectories.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].seed, r.trajectories[i].seed);
        EXPECT_EQ(rows[i].strategy, r.trajectories[i].strategy);
        EXPECT_EQ(rows[i].horizon, r.trajectories[i].horizon);
        EXPECT_EQ(rows[i].value, r.trajectories[i].value);
    }
    const auto again = summarize_trajectories(rows, r.labels, r.config.reference, r.config.epsilons);
    const auto json = nlohmann::json::parse(report_json(r));
    ASSERT_EQ(again.size(), json["strategies"].size());
    for (std::size_t j = 0; j < again.size(); ++j) {
        const auto& js = json["strategies"][j];
        EXPECT_EQ(js["label"].get<std::string>(), again[j].label);
        EXPECT_EQ(js["final_L_T"]["mean"].get<double>(), again[j].final_loss.mean);
        EXPECT_EQ(js["final_L_T"]["min"].get<double>(), again[j].final_loss.min);
        EXPECT_EQ(js["final_L_T"]["max"].get<double>(), again[j].final_loss.max);
        EXPECT_EQ(js["final_L_T"]["stderr"].get<double>(), again[j].final_loss.stderr_mean);
        EXPECT_EQ(js["final_L_T"]["count"].get<std::size_t>(), again[j].final_loss.count);
        ASSERT_EQ(js["weak_opt"].size(), again[j].weak_opt.size());
        for (std::size_t e = 0; e < again[j].weak_opt.size(); ++e) {
            EXPECT_EQ(js["weak_opt"][e]["successes"].get<std::size_t>(), again[j].weak_opt[e].estimate.successes);
            EXPECT_EQ(js["weak_opt"][e]["probability"].get<double>(), again[j].weak_opt[e].estimate.estimate);
        }
    }
    EXPECT_EQ(json["seeds"].get<std::size_t>(), 12u);
    EXPECT_EQ(json["tool_version"].get<std::string>(), kToolVersion);
    // the embedded config reproduces the run
    const auto cfg = parse_config(json["config"].get<std::string>());
    EXPECT_TRUE(cfg == r.config);
    EXPECT_EQ(trajectories_csv(run_experiment(cfg)), trajectories_csv(r));
}

TEST(Experiment, ProfilesPresent)
{
    const auto r = run_experiment(small_hmm());
    EXPECT_EQ(r.profile("lstar").size(), 12u);
    EXPECT_EQ(r.profile("conditional_mixing").size(), 9u);
    EXPECT_EQ(r.profile("conditional_mixing_cesaro").size(), 9u);
    EXPECT_EQ(r.profile("beta_mixing").size(), 5u);
    EXPECT_EQ(r.profile("particle_tv_T30").size(), 2u);
    EXPECT_EQ(r.profile("particle_disagreement_T30").size(), 2u);
    const auto csv = profiles_csv(r);
    EXPECT_EQ(csv.rfind("kind,index,value,W,M\n", 0), 0u);
    EXPECT_NE(csv.find("conditional_mixing,0,"), std::string::npos);
    EXPECT_NE(csv.find(",16,inf\n"), std::string::npos);
    for (const auto& g : r.regrets)
        EXPECT_TRUE(std::isfinite(g.stderr_diff));
}

TEST(Experiment, ThreadCountDoesNotChangeOutput)
{
    const auto cfg = small_hmm();
    const auto a = run_experiment(cfg, 1);
    const auto b = run_experiment(cfg, 5);
    EXPECT_EQ(trajectories_csv(a), trajectories_csv(b));
    EXPECT_EQ(profiles_csv(a), profiles_csv(b));
    EXPECT_EQ(trajectories_csv(a), trajectories_csv(run_experiment(cfg, 1)));
}

TEST(Experiment, MasterSeedMatters)
{
    auto cfg = small_hmm();
    const auto a = trajectories_csv(run_experiment(cfg));
    cfg.master_seed = 4;
    EXPECT_NE(a, trajectories_csv(run_experiment(cfg)));
}

TEST(Experiment, RuntimeFailureNamesSeedAndStep)
{
    // one particle with exact observations dies at the first state the particle misses
    auto cfg = parse_config(R"(model:
  kind: finite_hmm
  transition: [[0.5, 0.5], [0.5, 0.5]]
  emission: [[1, 0], [0, 1]]
loss:
  kind: quadratic
  grid: {values: [0, 1]}
strategies:
  - {kind: mean_optimal_particle, particles: 1}
horizon: 50
seeds: 3
)");
    try {
        run_experiment(cfg, 2);
        FAIL() << "expected RunError";
    } catch (const RunError& e) {
        EXPECT_EQ(e.seed(), 0u);
        EXPECT_GE(e.step(), 1u);
        EXPECT_LE(e.step(), 50u);
        EXPECT_NE(std::string(e.what()).find("seed 0, step"), std::string::npos);
    }
}

TEST(Experiment, InvalidConfigRejectedBeforeRunning)
{
    auto cfg = minimal();
    cfg.horizon = 0;
    EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Experiment, WriteOutputs)
{
    const auto dir = std::filesystem::temp_directory_path() / "pathopt_test_outputs";
    std::filesystem::remove_all(dir);
    const auto r = run_experiment(minimal());
    write_outputs(r, dir);
    EXPECT_EQ(read_file(dir / "trajectories.csv"), trajectories_csv(r));
    EXPECT_EQ(read_file(dir / "profiles.csv"), profiles_csv(r));
    const auto json = nlohmann::json::parse(read_file(dir / "report.json"));
    EXPECT_EQ(json["name"].get<std::string>(), "minimal");
    std::filesystem::remove_all(dir);
}

TEST(Experiment, Float17RoundTrips)
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.25, 12345.678901234567})
        EXPECT_EQ(std::stod(format_float17(v)), v);
    EXPECT_EQ(format_float17(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Registry, NamesAndUnknown)
{
    const auto& names = experiment_names();
    for (const char* n : {"example-1.2", "example-1.3", "example-2.4", "example-2.5", "hmm-filter-optimality",
                          "particle-approx"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    try {
        registered_config("example-9.9");
        FAIL();
    } catch (const UnknownExperiment& e) {
        EXPECT_NE(std::string(e.what()).find("example-1.2"), std::string::npos);
    }
}

TEST(Registry, ChecksFailOnWrongNumbers)
{
    auto r = run_experiment(minimal());
    // not example-1.2's config, so its checks must not all pass
    bool all = true;
    for (const auto& c : run_checks("example-1.2", r))
        all = all && c.passed;
    EXPECT_FALSE(all);
}
