#include "pathopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "pathopt/errors.hpp"
#include "pathopt/rng.hpp"

namespace pathopt {

std::string format_float17(double value)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

SampleSummary summarize(std::span<const double> values)
{
    SampleSummary s;
    s.count = values.size();
    if (values.empty())
        return s;
    double sum = 0.0;
    s.min = values[0];
    s.max = values[0];
    for (double v : values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    const double n = static_cast<double>(values.size());
    s.mean = sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stderr_mean = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

double RunReport::final_loss(const std::string& label, std::size_t seed) const
{
    const auto h = config.horizon;
    for (const auto& r : trajectories)
        if (r.seed == seed && r.horizon == h && r.strategy == label)
            return r.value;
    throw std::out_of_range("no trajectory for " + label + " on seed " + std::to_string(seed));
}

std::vector<double> RunReport::final_losses(const std::string& label) const
{
    std::vector<double> out;
    for (const auto& r : trajectories)
        if (r.horizon == config.horizon && r.strategy == label)
            out.push_back(r.value);
    return out;
}

std::vector<double> RunReport::profile(const std::string& kind) const
{
    std::vector<double> out;
    for (const auto& p : profiles)
        if (p.kind == kind)
            out.push_back(p.value);
    return out;
}

std::vector<StrategySummary> summarize_trajectories(const std::vector<TrajectoryRow>& rows,
                                                    const std::vector<std::string>& labels,
                                                    const std::string& reference,
                                                    const std::vector<double>& epsilons)
{
    std::size_t horizon = 0;
    for (const auto& r : rows)
        horizon = std::max(horizon, r.horizon);

    // label -> seed -> final L_T
    std::map<std::string, std::map<std::size_t, double>> finals;
    for (const auto& r : rows)
        if (r.horizon == horizon)
            finals[r.strategy][r.seed] = r.value;

    std::vector<StrategySummary> out;
    for (const auto& label : labels) {
        StrategySummary s;
        s.label = label;
        std::vector<double> values;
        for (const auto& [seed, v] : finals[label])
            values.push_back(v);
        s.final_loss = summarize(values);
        if (!reference.empty() && label != reference) {
            const auto& ref = finals[reference];
            for (double eps : epsilons) {
                std::size_t hits = 0, trials = 0;
                for (const auto& [seed, v] : finals[label]) {
                    const auto it = ref.find(seed);
                    if (it == ref.end())
                        continue;
                    ++trials;
                    if (v - it->second >= -eps)
                        ++hits;
                }
                s.weak_opt.push_back({eps, wilson_interval(hits, trials)});
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

struct SeedResult {
    std::vector<std::vector<double>> checkpoint_values; // [strategy][checkpoint]
    std::vector<PathRegret> regrets;
    double lstar = 0.0;
};

std::string truncation_label(double m)
{
    return format_float17(m);
}

} // namespace

RunReport run_experiment(const ExperimentConfig& config, unsigned threads)
{
    validate_config(config);
    const auto started = std::chrono::steady_clock::now();

    const ProcessModel model(config.model);
    const LossFunction loss(config.loss);

    RunReport report;
    report.config = config;
    report.checkpoints = config.effective_checkpoints();
    for (const auto& s : config.strategies)
        report.labels.push_back(s.label());

    std::size_t ref_index = config.strategies.size();
    for (std::size_t j = 0; j < report.labels.size(); ++j)
        if (report.labels[j] == config.reference)
            ref_index = j;

    std::vector<SeedResult> results(config.seeds);
    std::vector<std::string> errors(config.seeds);
    std::vector<std::size_t> error_steps(config.seeds, 0);

    parallel_for(config.seeds, threads, [&](std::size_t i) {
        try {
            const std::uint64_t path_seed = derive_seed(config.master_seed, i);
            const Path path = sample_for_loss(model, loss, config.horizon, path_seed);
            std::vector<LossTrajectory> runs;
            runs.reserve(config.strategies.size());
            for (const auto& spec : config.strategies) {
                auto strategy = make_strategy(spec, model, loss);
                runs.push_back(run_strategy(*strategy, loss, path));
            }
            SeedResult& res = results[i];
            for (const auto& run : runs) {
                std::vector<double> values;
                for (std::size_t t : report.checkpoints)
                    values.push_back(run.average(t));
                res.checkpoint_values.push_back(std::move(values));
            }
            if (ref_index < runs.size()) {
                const auto& ref = runs[ref_index];
                std::vector<double> diff(config.horizon);
                for (std::size_t j = 0; j < runs.size(); ++j) {
                    if (j == ref_index)
                        continue;
                    for (std::size_t k = 0; k < config.horizon; ++k)
                        diff[k] = runs[j].losses[k] - ref.losses[k];
                    PathRegret r;
                    r.strategy = report.labels[j];
                    r.seed = i;
                    r.difference = runs[j].final_average() - ref.final_average();
                    r.stderr_diff = config.horizon >= 2 * config.batches
                                        ? batch_means_stderr(diff, config.batches)
                                        : std::numeric_limits<double>::quiet_NaN();
                    res.regrets.push_back(std::move(r));
                }
            }
            if (config.lstar)
                res.lstar = estimate_lstar(model, loss, config.horizon, path_seed);
        } catch (const StepFailure& e) {
            errors[i] = e.what();
            error_steps[i] = e.step();
        } catch (const DegenerateObservation& e) {
            errors[i] = e.what();
            error_steps[i] = e.time();
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < config.seeds; ++i)
        if (!errors[i].empty())
            throw RunError(i, error_steps[i], errors[i]);

    for (std::size_t i = 0; i < config.seeds; ++i) {
        for (std::size_t j = 0; j < report.labels.size(); ++j)
            for (std::size_t c = 0; c < report.checkpoints.size(); ++c)
                report.trajectories.push_back(
                    {i, report.labels[j], report.checkpoints[c], results[i].checkpoint_values[j][c]});
        for (auto& r : results[i].regrets)
            report.regrets.push_back(std::move(r));
        if (config.lstar)
            report.lstar.push_back(results[i].lstar);
    }
    report.summaries = summarize_trajectories(report.trajectories, report.labels, config.reference, config.epsilons);

    for (std::size_t i = 0; i < report.lstar.size(); ++i)
        report.profiles.push_back({"lstar", i, report.lstar[i], 0, ""});

    if (config.mixing) {
        MixingRequest req;
        req.window = config.mixing->window;
        req.truncation = config.mixing->truncation;
        req.max_lag = config.mixing->max_lag;
        req.windows = config.mixing->windows;
        req.seed = config.master_seed;
        const auto profile = conditional_mixing_profile(model, loss, req);
        const auto m = truncation_label(profile.truncation);
        for (std::size_t k = 0; k < profile.values.size(); ++k)
            report.profiles.push_back({"conditional_mixing", k, profile.values[k], profile.window, m});
        for (std::size_t k = 0; k < profile.cesaro.size(); ++k)
            report.profiles.push_back({"conditional_mixing_cesaro", k, profile.cesaro[k], profile.window, m});
    }
    if (config.beta_max_lag) {
        const auto beta = beta_mixing_profile(*model.finite_hmm(), *config.beta_max_lag);
        for (std::size_t n = 0; n < beta.size(); ++n)
            report.profiles.push_back({"beta_mixing", n + 1, beta[n], 0, ""});
    }
    for (const auto& diag : config.particles) {
        const std::string suffix = "_T" + std::to_string(diag.horizon);
        for (std::size_t n : diag.counts) {
            std::vector<ParticleDiagnostics> per_seed(diag.seeds);
            std::vector<std::string> diag_errors(diag.seeds);
            parallel_for(diag.seeds, threads, [&](std::size_t j) {
                try {
                    per_seed[j] = particle_diagnostics(model, loss, n, diag.horizon,
                                                       derive_seed(config.master_seed, j));
                } catch (const std::exception& e) {
                    diag_errors[j] = e.what();
                }
            });
            for (std::size_t j = 0; j < diag.seeds; ++j)
                if (!diag_errors[j].empty())
                    throw RunError(j, 0, "particle diagnostic with " + std::to_string(n) + " particles: " + diag_errors[j]);
            double tv = 0.0, dis = 0.0;
            for (const auto& d : per_seed) {
                tv += d.mean_tv;
                dis += d.disagreement;
            }
            const double count = static_cast<double>(diag.seeds);
            report.profiles.push_back({"particle_tv" + suffix, n, tv / count, 0, ""});
            report.profiles.push_back({"particle_disagreement" + suffix, n, dis / count, 0, ""});
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string trajectories_csv(const RunReport& report)
{
    std::string out = "seed,strategy,T,L_T\n";
    for (const auto& r : report.trajectories)
        out += std::to_string(r.seed) + "," + r.strategy + "," + std::to_string(r.horizon) + "," +
               format_float17(r.value) + "\n";
    return out;
}

std::string profiles_csv(const RunReport& report)
{
    std::string out = "kind,index,value,W,M\n";
    for (const auto& p : report.profiles)
        out += p.kind + "," + std::to_string(p.index) + "," + format_float17(p.value) + "," +
               std::to_string(p.window) + "," + p.truncation + "\n";
    return out;
}

std::vector<TrajectoryRow> parse_trajectories_csv(const std::string& text)
{
    std::vector<TrajectoryRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "seed,strategy,T,L_T")
        throw std::invalid_argument("trajectories.csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (fields.size() != 4)
            throw std::invalid_argument("trajectories.csv: malformed row '" + line + "'");
        rows.push_back({std::stoull(fields[0]), fields[1], std::stoull(fields[2]), std::stod(fields[3])});
    }
    return rows;
}

namespace {

nlohmann::json json_number(double v)
{
    if (std::isfinite(v))
        return v;
    return format_float17(v);
}

nlohmann::json summary_json(const SampleSummary& s)
{
    return {{"mean", json_number(s.mean)},
            {"min", json_number(s.min)},
            {"max", json_number(s.max)},
            {"stderr", json_number(s.stderr_mean)},
            {"count", s.count}};
}

} // namespace

std::string report_json(const RunReport& report)
{
    using nlohmann::json;
    json j;
    j["name"] = report.config.name;
    j["tool_version"] = kToolVersion;
    j["horizon"] = report.config.horizon;
    j["seeds"] = report.config.seeds;
    j["master_seed"] = report.config.master_seed;
    j["reference"] = report.config.reference;
    j["checkpoints"] = report.checkpoints;

    json strategies = json::array();
    for (const auto& s : report.summaries) {
        json e;
        e["label"] = s.label;
        e["final_L_T"] = summary_json(s.final_loss);
        json weak = json::array();
        for (const auto& w : s.weak_opt)
            weak.push_back({{"epsilon", w.epsilon},
                            {"successes", w.estimate.successes},
                            {"trials", w.estimate.trials},
                            {"probability", w.estimate.estimate},
                            {"lower", w.estimate.lower},
                            {"upper", w.estimate.upper}});
        e["weak_opt"] = weak;
        strategies.push_back(e);
    }
    j["strategies"] = strategies;

    if (!report.regrets.empty()) {
        json regrets = json::array();
        for (const auto& r : report.regrets)
            regrets.push_back({{"strategy", r.strategy},
                               {"seed", r.seed},
                               {"difference", json_number(r.difference)},
                               {"stderr", json_number(r.stderr_diff)}});
        j["path_regrets"] = regrets;
    }
    if (!report.lstar.empty())
        j["lstar"] = summary_json(summarize(report.lstar));

    json profiles = json::object();
    for (const auto& p : report.profiles)
        profiles[p.kind].push_back({{"index", p.index}, {"value", json_number(p.value)}});
    j["profiles"] = profiles;

    if (!report.checks.empty()) {
        json checks = json::array();
        for (const auto& c : report.checks)
            checks.push_back(
                {{"name", c.name}, {"expected", c.expected}, {"observed", c.observed}, {"passed", c.passed}});
        j["checks"] = checks;
    }
    j["wall_clock_seconds"] = report.wall_clock_seconds;
    j["config"] = serialize_config(report.config);
    return j.dump(2) + "\n";
}

void write_outputs(const RunReport& report, const std::filesystem::path& directory)
{
    std::filesystem::create_directories(directory);
    const auto write = [&](const char* name, const std::string& text) {
        std::ofstream out(directory / name, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + (directory / name).string());
        out << text;
    };
    write("trajectories.csv", trajectories_csv(report));
    write("profiles.csv", profiles_csv(report));
    write("report.json", report_json(report));
}

} // namespace pathopt
