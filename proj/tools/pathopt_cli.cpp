#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pathopt/config.hpp"
#include "pathopt/errors.hpp"
#include "pathopt/experiment.hpp"
#include "pathopt/registry.hpp"

namespace {

using namespace pathopt;

void print_summary(const RunReport& report)
{
    std::printf("%s: T = %zu, %zu seeds, master seed %llu\n", report.config.name.c_str(), report.config.horizon,
                report.config.seeds, static_cast<unsigned long long>(report.config.master_seed));
    std::printf("%-28s %10s %10s %10s %10s\n", "strategy", "mean L_T", "min", "max", "stderr");
    for (const auto& s : report.summaries) {
        std::printf("%-28s %10.4f %10.4f %10.4f %10.4g\n", s.label.c_str(), s.final_loss.mean, s.final_loss.min,
                    s.final_loss.max, s.final_loss.stderr_mean);
        for (const auto& w : s.weak_opt)
            std::printf("  P[L_T - L_T(%s) >= -%g] = %.4f  [%.4f, %.4f]\n", report.config.reference.c_str(),
                        w.epsilon, w.estimate.estimate, w.estimate.lower, w.estimate.upper);
    }
    if (!report.lstar.empty())
        std::printf("L* estimate (mean over seeds): %.6f\n", summarize(report.lstar).mean);
    std::printf("wall clock: %.2f s\n", report.wall_clock_seconds);
}

const char* model_description(ProcessKind kind)
{
    switch (kind) {
    case ProcessKind::FlipFlop: return "deterministic alternation from a uniform start; blind";
    case ProcessKind::XorPair: return "pairs of fair bits, observed through their xor";
    case ProcessKind::BinaryExpansion: return "X_{k+1} = (X_k + eps_{k+1}) / 2 on bit_depth-bit words; blind";
    case ProcessKind::LookaheadIID: return "i.i.d. fair bits; blind";
    case ProcessKind::DoublingMap: return "X_{k+1} = 2 X_k mod 1 on bit_depth-bit words; blind";
    case ProcessKind::FiniteHMM: return "finite HMM given by transition and emission matrices";
    }
    return "";
}

const char* loss_description(LossKind kind)
{
    switch (kind) {
    case LossKind::Quadratic: return "(u - f(x))^2";
    case LossKind::LpPrediction: return "|u - f(x)|^p";
    case LossKind::LogPortfolio: return "-log(sum_i u_i r_i(x)) on a simplex grid";
    case LossKind::Interval: return "0 when u <= f(x) < u + width, else 1";
    case LossKind::BitLoss: return "eps_{k-u+1} of the binary expansion record";
    case LossKind::LookaheadIndex: return "X_{k+u}, reads the future of the path";
    }
    return "";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pathwise optimality experiments for partially observed decision problems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string name;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "YAML experiment config")->required();
    auto* reproduce_cmd = app.add_subcommand("reproduce", "run a registered experiment and check expected values");
    reproduce_cmd->add_option("name", name, "experiment name")->required();
    for (auto* sub : {run, reproduce_cmd}) {
        sub->add_option("--seed", seed, "override the master seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--out", out, "output directory");
    }
    auto* list_models = app.add_subcommand("list-models", "list process kinds");
    auto* list_losses = app.add_subcommand("list-losses", "list loss kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (list_models->parsed()) {
        for (auto k : {ProcessKind::FlipFlop, ProcessKind::XorPair, ProcessKind::BinaryExpansion,
                       ProcessKind::LookaheadIID, ProcessKind::DoublingMap, ProcessKind::FiniteHMM})
            std::printf("%-18s %s\n", std::string(to_string(k)).c_str(), model_description(k));
        return 0;
    }
    if (list_losses->parsed()) {
        for (auto k : {LossKind::Quadratic, LossKind::LpPrediction, LossKind::LogPortfolio, LossKind::Interval,
                       LossKind::BitLoss, LossKind::LookaheadIndex})
            std::printf("%-18s %s\n", std::string(to_string(k)).c_str(), loss_description(k));
        return 0;
    }

    try {
        if (run->parsed()) {
            auto config = load_config(config_path);
            if (seed)
                config.master_seed = *seed;
            if (!out.empty())
                config.output = out;
            const auto report = run_experiment(config, threads);
            write_outputs(report, config.output);
            print_summary(report);
            std::printf("outputs written to %s\n", config.output.c_str());
            return 0;
        }
        auto report = reproduce(name, threads, seed);
        const std::string dir = out.empty() ? report.config.output : out;
        report.config.output = dir;
        write_outputs(report, dir);
        print_summary(report);
        std::printf("\n%s", format_checks(report.checks).c_str());
        std::printf("outputs written to %s\n", dir.c_str());
        for (const auto& c : report.checks)
            if (!c.passed)
                return 1;
        return 0;
    } catch (const UnknownExperiment& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const RunError& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
