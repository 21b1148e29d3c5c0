#include "pathopt/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace pathopt {

namespace {

std::size_t line_of(const YAML::Node& node)
{
    const auto mark = node.Mark();
    return mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& message)
{
    throw ConfigError(line_of(node), field, message);
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> allowed)
{
    if (!node.IsMap())
        fail(node, path, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail(kv.first, path.empty() ? key : path + "." + key, "unknown field '" + key + "'");
    }
}

std::string join(const std::string& path, std::string_view key)
{
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& field)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(node, field, "has the wrong type");
    }
}

double number_as(const YAML::Node& node, const std::string& field)
{
    if (node.IsScalar()) {
        const auto s = node.Scalar();
        if (s == "inf" || s == ".inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
    }
    return scalar_as<double>(node, field);
}

std::size_t count_as(const YAML::Node& node, const std::string& field)
{
    const auto v = scalar_as<long long>(node, field);
    if (v < 0)
        fail(node, field, "must be nonnegative");
    return static_cast<std::size_t>(v);
}

template <typename T, typename F>
std::vector<T> list_as(const YAML::Node& node, const std::string& field, F&& convert)
{
    if (!node.IsSequence())
        fail(node, field, "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < node.size(); ++i)
        out.push_back(convert(node[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Matrix matrix_as(const YAML::Node& node, const std::string& field)
{
    auto rows = list_as<std::vector<double>>(node, field, [](const YAML::Node& r, const std::string& f) {
        return list_as<double>(r, f, number_as);
    });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].size() != rows[0].size())
            fail(node[i], field + "[" + std::to_string(i) + "]", "ragged matrix row");
    return Matrix::from_rows(rows);
}

ModelSpec parse_model(const YAML::Node& node, const std::string& path)
{
    check_keys(node, path, {"kind", "bit_depth", "max_delay", "transition", "emission"});
    if (!node["kind"])
        fail(node, join(path, "kind"), "is required");
    ModelSpec spec;
    try {
        spec.kind = process_kind_from_string(scalar_as<std::string>(node["kind"], join(path, "kind")));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(node["kind"], join(path, "kind"), e.what());
    }
    if (node["bit_depth"])
        spec.bit_depth = scalar_as<int>(node["bit_depth"], join(path, "bit_depth"));
    if (node["max_delay"])
        spec.max_delay = scalar_as<int>(node["max_delay"], join(path, "max_delay"));
    if (node["transition"])
        spec.transition = matrix_as(node["transition"], join(path, "transition"));
    if (node["emission"])
        spec.emission = matrix_as(node["emission"], join(path, "emission"));
    return spec;
}

GridSpec parse_grid(const YAML::Node& node, const std::string& path)
{
    check_keys(node, path, {"values", "range", "integers", "simplex"});
    if (node.size() != 1)
        fail(node, path, "exactly one of values, range, integers, simplex is required");
    GridSpec g;
    if (node["values"]) {
        g.kind = GridSpec::Kind::Values;
        g.values = list_as<double>(node["values"], join(path, "values"), number_as);
    } else if (node["range"]) {
        const auto r = node["range"];
        const auto p = join(path, "range");
        check_keys(r, p, {"start", "stop", "step"});
        g.kind = GridSpec::Kind::Range;
        if (!r["start"] || !r["stop"] || !r["step"])
            fail(r, p, "needs start, stop and step");
        g.start = number_as(r["start"], join(p, "start"));
        g.stop = number_as(r["stop"], join(p, "stop"));
        g.step = number_as(r["step"], join(p, "step"));
    } else if (node["integers"]) {
        const auto r = node["integers"];
        const auto p = join(path, "integers");
        check_keys(r, p, {"lo", "hi"});
        if (!r["lo"] || !r["hi"])
            fail(r, p, "needs lo and hi");
        g.kind = GridSpec::Kind::Integers;
        g.lo = scalar_as<long long>(r["lo"], join(p, "lo"));
        g.hi = scalar_as<long long>(r["hi"], join(p, "hi"));
    } else {
        const auto r = node["simplex"];
        const auto p = join(path, "simplex");
        check_keys(r, p, {"assets", "divisions"});
        if (!r["assets"] || !r["divisions"])
            fail(r, p, "needs assets and divisions");
        g.kind = GridSpec::Kind::Simplex;
        g.assets = count_as(r["assets"], join(p, "assets"));
        g.divisions = count_as(r["divisions"], join(p, "divisions"));
    }
    return g;
}

LossSpec parse_loss(const YAML::Node& node, const std::string& path)
{
    check_keys(node, path,
               {"kind", "feature", "feature_table", "feature_bit_depth", "exponent", "returns", "width", "grid"});
    if (!node["kind"])
        fail(node, join(path, "kind"), "is required");
    if (!node["grid"])
        fail(node, join(path, "grid"), "is required");
    LossSpec spec;
    try {
        spec.kind = loss_kind_from_string(scalar_as<std::string>(node["kind"], join(path, "kind")));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(node["kind"], join(path, "kind"), e.what());
    }
    if (node["feature"]) {
        try {
            spec.feature.kind = feature_kind_from_string(scalar_as<std::string>(node["feature"], join(path, "feature")));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            fail(node["feature"], join(path, "feature"), e.what());
        }
    }
    if (node["feature_table"])
        spec.feature.table = list_as<double>(node["feature_table"], join(path, "feature_table"), number_as);
    if (node["feature_bit_depth"])
        spec.feature.bit_depth = scalar_as<int>(node["feature_bit_depth"], join(path, "feature_bit_depth"));
    if (node["exponent"])
        spec.exponent = number_as(node["exponent"], join(path, "exponent"));
    if (node["returns"])
        spec.returns = matrix_as(node["returns"], join(path, "returns"));
    if (node["width"])
        spec.width = number_as(node["width"], join(path, "width"));
    spec.grid = parse_grid(node["grid"], join(path, "grid"));
    return spec;
}

StrategySpec parse_strategy(const YAML::Node& node, const std::string& path)
{
    check_keys(node, path, {"kind", "name", "value", "weights", "shift", "particles", "schedule", "seed"});
    if (!node["kind"])
        fail(node, join(path, "kind"), "is required");
    StrategySpec spec;
    try {
        spec.kind = strategy_kind_from_string(scalar_as<std::string>(node["kind"], join(path, "kind")));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(node["kind"], join(path, "kind"), e.what());
    }
    if (node["name"]) {
        spec.name = scalar_as<std::string>(node["name"], join(path, "name"));
        if (spec.name.find_first_of(",\"\n\r") != std::string::npos)
            fail(node["name"], join(path, "name"), "must not contain commas, quotes or newlines");
    }
    if (node["value"])
        spec.value = number_as(node["value"], join(path, "value"));
    if (node["weights"])
        spec.weights = list_as<double>(node["weights"], join(path, "weights"), number_as);
    if (node["shift"])
        spec.shift = scalar_as<int>(node["shift"], join(path, "shift"));
    if (node["particles"])
        spec.particles = count_as(node["particles"], join(path, "particles"));
    if (node["schedule"])
        spec.schedule = list_as<std::size_t>(node["schedule"], join(path, "schedule"), count_as);
    if (node["seed"])
        spec.seed = scalar_as<std::uint64_t>(node["seed"], join(path, "seed"));
    return spec;
}

void parse_diagnostics(const YAML::Node& node, ExperimentConfig& cfg)
{
    const std::string path = "diagnostics";
    check_keys(node, path, {"lstar", "conditional_mixing", "beta_mixing", "particles"});
    if (node["lstar"])
        cfg.lstar = scalar_as<bool>(node["lstar"], join(path, "lstar"));
    if (const auto m = node["conditional_mixing"]) {
        const auto p = join(path, "conditional_mixing");
        check_keys(m, p, {"window", "truncation", "max_lag", "windows"});
        MixingDiagnostic d;
        if (m["window"])
            d.window = count_as(m["window"], join(p, "window"));
        if (m["truncation"])
            d.truncation = number_as(m["truncation"], join(p, "truncation"));
        if (m["max_lag"])
            d.max_lag = count_as(m["max_lag"], join(p, "max_lag"));
        if (m["windows"])
            d.windows = count_as(m["windows"], join(p, "windows"));
        if (d.max_lag > d.window)
            fail(m, join(p, "max_lag"), "max_lag must not exceed window");
        if (d.windows < 1 || d.window < 1)
            fail(m, p, "window and windows must be >= 1");
        cfg.mixing = d;
    }
    if (const auto b = node["beta_mixing"]) {
        const auto p = join(path, "beta_mixing");
        check_keys(b, p, {"max_lag"});
        cfg.beta_max_lag = b["max_lag"] ? count_as(b["max_lag"], join(p, "max_lag")) : 20;
    }
    if (const auto ps = node["particles"]) {
        const auto p = join(path, "particles");
        if (!ps.IsSequence())
            fail(ps, p, "expected a list");
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto pi = p + "[" + std::to_string(i) + "]";
            check_keys(ps[i], pi, {"counts", "horizon", "seeds"});
            ParticleDiagnostic d;
            if (!ps[i]["counts"])
                fail(ps[i], join(pi, "counts"), "is required");
            d.counts = list_as<std::size_t>(ps[i]["counts"], join(pi, "counts"), count_as);
            if (ps[i]["horizon"])
                d.horizon = count_as(ps[i]["horizon"], join(pi, "horizon"));
            if (ps[i]["seeds"])
                d.seeds = count_as(ps[i]["seeds"], join(pi, "seeds"));
            if (d.horizon < 1 || d.seeds < 1)
                fail(ps[i], pi, "horizon and seeds must be >= 1");
            for (std::size_t n : d.counts)
                if (n < 1)
                    fail(ps[i]["counts"], join(pi, "counts"), "particle counts must be >= 1");
            cfg.particles.push_back(std::move(d));
        }
    }
}

std::string format_line(std::size_t line)
{
    return line == 0 ? std::string() : "line " + std::to_string(line) + ": ";
}

} // namespace

ConfigError::ConfigError(std::size_t line, std::string field, const std::string& message)
    : std::invalid_argument(format_line(line) + (field.empty() ? std::string() : "field '" + field + "': ") + message),
      line_(line), field_(std::move(field))
{
}

std::vector<std::size_t> ExperimentConfig::effective_checkpoints() const
{
    std::vector<std::size_t> cps;
    for (std::size_t c : checkpoints)
        if (c >= 1 && c <= horizon)
            cps.push_back(c);
    cps.push_back(horizon);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    return cps;
}

ExperimentConfig parse_config(std::string_view text)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(static_cast<std::size_t>(e.mark.line) + 1, "", e.msg);
    }
    if (!root.IsMap())
        throw ConfigError(1, "", "configuration must be a mapping");
    check_keys(root, "",
               {"name", "model", "loss", "strategies", "reference", "horizon", "checkpoints", "seeds", "master_seed",
                "epsilons", "batches", "diagnostics", "output"});

    ExperimentConfig cfg;
    if (root["name"])
        cfg.name = scalar_as<std::string>(root["name"], "name");
    if (!root["model"])
        fail(root, "model", "is required");
    cfg.model = parse_model(root["model"], "model");
    if (!root["loss"])
        fail(root, "loss", "is required");
    cfg.loss = parse_loss(root["loss"], "loss");
    if (!root["strategies"])
        fail(root, "strategies", "is required");
    const auto strategies = root["strategies"];
    if (!strategies.IsSequence() || strategies.size() == 0)
        fail(strategies, "strategies", "expected a non-empty list");
    for (std::size_t i = 0; i < strategies.size(); ++i)
        cfg.strategies.push_back(parse_strategy(strategies[i], "strategies[" + std::to_string(i) + "]"));
    if (root["reference"])
        cfg.reference = scalar_as<std::string>(root["reference"], "reference");
    if (!root["horizon"])
        fail(root, "horizon", "is required");
    {
        const auto v = scalar_as<long long>(root["horizon"], "horizon");
        if (v < 1)
            fail(root["horizon"], "horizon", "horizon must be ≥ 1");
        cfg.horizon = static_cast<std::size_t>(v);
    }
    if (root["checkpoints"])
        cfg.checkpoints = list_as<std::size_t>(root["checkpoints"], "checkpoints", count_as);
    if (root["seeds"]) {
        const auto v = scalar_as<long long>(root["seeds"], "seeds");
        if (v < 1)
            fail(root["seeds"], "seeds", "seeds must be ≥ 1");
        cfg.seeds = static_cast<std::size_t>(v);
    }
    if (root["master_seed"])
        cfg.master_seed = scalar_as<std::uint64_t>(root["master_seed"], "master_seed");
    if (root["epsilons"]) {
        cfg.epsilons = list_as<double>(root["epsilons"], "epsilons", number_as);
        for (std::size_t i = 0; i < cfg.epsilons.size(); ++i)
            if (!(cfg.epsilons[i] > 0.0))
                fail(root["epsilons"][i], "epsilons[" + std::to_string(i) + "]", "epsilon must be > 0");
    }
    if (root["batches"]) {
        cfg.batches = count_as(root["batches"], "batches");
        if (cfg.batches < 2)
            fail(root["batches"], "batches", "batches must be ≥ 2");
    }
    if (root["diagnostics"])
        parse_diagnostics(root["diagnostics"], cfg);
    if (root["output"])
        cfg.output = scalar_as<std::string>(root["output"], "output");
    if (!cfg.reference.empty()) {
        const bool found = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                       [&](const StrategySpec& s) { return s.label() == cfg.reference; });
        if (!found)
            fail(root["reference"], "reference", "no strategy is labelled '" + cfg.reference + "'");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        if (!labels.insert(cfg.strategies[i].label()).second)
            fail(strategies[i], "strategies[" + std::to_string(i) + "]",
                 "duplicate strategy label '" + cfg.strategies[i].label() + "'");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw ConfigError(0, "", "cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

void emit_number(YAML::Emitter& out, double v)
{
    if (std::isinf(v))
        out << (v > 0 ? "inf" : "-inf");
    else
        out << v;
}

void emit_numbers(YAML::Emitter& out, const std::vector<double>& values)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (double v : values)
        emit_number(out, v);
    out << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& out, const Matrix& m)
{
    out << YAML::BeginSeq;
    for (std::size_t i = 0; i < m.rows(); ++i)
        emit_numbers(out, std::vector<double>(m.row(i).begin(), m.row(i).end()));
    out << YAML::EndSeq;
}

template <typename T>
void emit_list(YAML::Emitter& out, const std::vector<T>& values)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : values)
        out << v;
    out << YAML::EndSeq;
}

} // namespace

std::string serialize_config(const ExperimentConfig& cfg)
{
    const StrategySpec defaults_strategy;

    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.name;

    out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(cfg.model.kind));
    out << YAML::Key << "bit_depth" << YAML::Value << cfg.model.bit_depth;
    out << YAML::Key << "max_delay" << YAML::Value << cfg.model.max_delay;
    if (!cfg.model.transition.empty()) {
        out << YAML::Key << "transition" << YAML::Value;
        emit_matrix(out, cfg.model.transition);
    }
    if (!cfg.model.emission.empty()) {
        out << YAML::Key << "emission" << YAML::Value;
        emit_matrix(out, cfg.model.emission);
    }
    out << YAML::EndMap;

    const LossSpec& loss = cfg.loss;
    out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(loss.kind));
    out << YAML::Key << "feature" << YAML::Value << std::string(to_string(loss.feature.kind));
    if (!loss.feature.table.empty()) {
        out << YAML::Key << "feature_table" << YAML::Value;
        emit_numbers(out, loss.feature.table);
    }
    out << YAML::Key << "feature_bit_depth" << YAML::Value << loss.feature.bit_depth;
    out << YAML::Key << "exponent" << YAML::Value;
    emit_number(out, loss.exponent);
    if (!loss.returns.empty()) {
        out << YAML::Key << "returns" << YAML::Value;
        emit_matrix(out, loss.returns);
    }
    out << YAML::Key << "width" << YAML::Value;
    emit_number(out, loss.width);
    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    switch (loss.grid.kind) {
    case GridSpec::Kind::Values:
        out << YAML::Key << "values" << YAML::Value;
        emit_numbers(out, loss.grid.values);
        break;
    case GridSpec::Kind::Range:
        out << YAML::Key << "range" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "start" << YAML::Value;
        emit_number(out, loss.grid.start);
        out << YAML::Key << "stop" << YAML::Value;
        emit_number(out, loss.grid.stop);
        out << YAML::Key << "step" << YAML::Value;
        emit_number(out, loss.grid.step);
        out << YAML::EndMap;
        break;
    case GridSpec::Kind::Integers:
        out << YAML::Key << "integers" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "lo" << YAML::Value << static_cast<long long>(loss.grid.lo);
        out << YAML::Key << "hi" << YAML::Value << static_cast<long long>(loss.grid.hi);
        out << YAML::EndMap;
        break;
    case GridSpec::Kind::Simplex:
        out << YAML::Key << "simplex" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "assets" << YAML::Value << loss.grid.assets;
        out << YAML::Key << "divisions" << YAML::Value << loss.grid.divisions;
        out << YAML::EndMap;
        break;
    }
    out << YAML::EndMap;
    out << YAML::EndMap;

    out << YAML::Key << "strategies" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : cfg.strategies) {
        out << YAML::BeginMap;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
        if (!s.name.empty())
            out << YAML::Key << "name" << YAML::Value << s.name;
        if (s.value != defaults_strategy.value || (s.kind == StrategyKind::Constant && s.weights.empty())) {
            out << YAML::Key << "value" << YAML::Value;
            emit_number(out, s.value);
        }
        if (!s.weights.empty()) {
            out << YAML::Key << "weights" << YAML::Value;
            emit_numbers(out, s.weights);
        }
        if (s.shift != defaults_strategy.shift)
            out << YAML::Key << "shift" << YAML::Value << s.shift;
        if (s.particles != defaults_strategy.particles)
            out << YAML::Key << "particles" << YAML::Value << s.particles;
        if (!s.schedule.empty()) {
            out << YAML::Key << "schedule" << YAML::Value;
            emit_list(out, s.schedule);
        }
        if (s.seed != defaults_strategy.seed)
            out << YAML::Key << "seed" << YAML::Value << s.seed;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (!cfg.reference.empty())
        out << YAML::Key << "reference" << YAML::Value << cfg.reference;
    out << YAML::Key << "horizon" << YAML::Value << cfg.horizon;
    if (!cfg.checkpoints.empty()) {
        out << YAML::Key << "checkpoints" << YAML::Value;
        emit_list(out, cfg.checkpoints);
    }
    out << YAML::Key << "seeds" << YAML::Value << cfg.seeds;
    out << YAML::Key << "master_seed" << YAML::Value << cfg.master_seed;
    if (!cfg.epsilons.empty()) {
        out << YAML::Key << "epsilons" << YAML::Value;
        emit_numbers(out, cfg.epsilons);
    }
    out << YAML::Key << "batches" << YAML::Value << cfg.batches;

    const bool any_diag = cfg.lstar || cfg.mixing || cfg.beta_max_lag || !cfg.particles.empty();
    if (any_diag) {
        out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
        if (cfg.lstar)
            out << YAML::Key << "lstar" << YAML::Value << true;
        if (cfg.mixing) {
            out << YAML::Key << "conditional_mixing" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "window" << YAML::Value << cfg.mixing->window;
            out << YAML::Key << "truncation" << YAML::Value;
            emit_number(out, cfg.mixing->truncation);
            out << YAML::Key << "max_lag" << YAML::Value << cfg.mixing->max_lag;
            out << YAML::Key << "windows" << YAML::Value << cfg.mixing->windows;
            out << YAML::EndMap;
        }
        if (cfg.beta_max_lag) {
            out << YAML::Key << "beta_mixing" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "max_lag" << YAML::Value << *cfg.beta_max_lag;
            out << YAML::EndMap;
        }
        if (!cfg.particles.empty()) {
            out << YAML::Key << "particles" << YAML::Value << YAML::BeginSeq;
            for (const auto& p : cfg.particles) {
                out << YAML::BeginMap;
                out << YAML::Key << "counts" << YAML::Value;
                emit_list(out, p.counts);
                out << YAML::Key << "horizon" << YAML::Value << p.horizon;
                out << YAML::Key << "seeds" << YAML::Value << p.seeds;
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::Key << "output" << YAML::Value << cfg.output;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void validate_config(const ExperimentConfig& cfg)
{
    if (cfg.horizon < 1)
        throw ConfigError(0, "horizon", "horizon must be ≥ 1");
    if (cfg.seeds < 1)
        throw ConfigError(0, "seeds", "seeds must be ≥ 1");
    std::optional<ProcessModel> model;
    try {
        model.emplace(cfg.model);
    } catch (const std::exception& e) {
        throw ConfigError(0, "model", e.what());
    }
    std::optional<LossFunction> loss;
    try {
        loss.emplace(cfg.loss);
    } catch (const std::exception& e) {
        throw ConfigError(0, "loss", e.what());
    }
    if (loss->kind() == LossKind::BitLoss && model->kind() != ProcessKind::BinaryExpansion)
        throw ConfigError(0, "loss.kind", "bit_loss needs a binary_expansion model");
    if (loss->kind() == LossKind::LogPortfolio && model->finite_hmm()
        && loss->spec().returns.rows() != model->finite_hmm()->states())
        throw ConfigError(0, "loss.returns", "returns table needs one row per hidden state");
    if (loss->state_only() && loss->spec().feature.kind == FeatureSpec::Kind::Table && model->finite_hmm()
        && loss->spec().feature.table.size() != model->finite_hmm()->states())
        throw ConfigError(0, "loss.feature_table", "feature table needs one entry per hidden state");
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
        try {
            (void)make_strategy(cfg.strategies[i], *model, *loss);
        } catch (const std::exception& e) {
            throw ConfigError(0, "strategies[" + std::to_string(i) + "]", e.what());
        }
    }
    const bool needs_finite = cfg.lstar || cfg.mixing || cfg.beta_max_lag || !cfg.particles.empty();
    if (needs_finite && !model->finite_hmm())
        throw ConfigError(0, "diagnostics", "diagnostics need a finite-state model");
    if ((cfg.lstar || cfg.mixing || !cfg.particles.empty()) && !loss->state_only())
        throw ConfigError(0, "diagnostics", "diagnostics need a state-only loss");
}

} // namespace pathopt
