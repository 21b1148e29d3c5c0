#include "pathopt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pathopt/errors.hpp"

namespace pathopt {

namespace {

constexpr double kGridMatchTol = 1e-9;

void enumerate_compositions(std::size_t assets, std::size_t remaining, std::vector<std::size_t>& current,
                            const std::function<void(const std::vector<std::size_t>&)>& emit)
{
    if (current.size() + 1 == assets) {
        current.push_back(remaining);
        emit(current);
        current.pop_back();
        return;
    }
    for (std::size_t n = remaining + 1; n-- > 0;) {
        current.push_back(n);
        enumerate_compositions(assets, remaining - n, current, emit);
        current.pop_back();
    }
}

} // namespace

// ---------------------------------------------------------------------------
// DecisionGrid

DecisionGrid DecisionGrid::values(std::vector<double> points)
{
    DecisionGrid g;
    g.kind_ = Kind::Values;
    g.values_ = std::move(points);
    return g;
}

DecisionGrid DecisionGrid::range(double start, double stop, double step)
{
    if (!(step > 0.0) || stop < start)
        throw std::invalid_argument("decision range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::llround((stop - start) / step));
    std::vector<double> pts(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        pts[i] = n == 0 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n);
    return values(std::move(pts));
}

DecisionGrid DecisionGrid::integers(std::int64_t lo, std::int64_t hi)
{
    DecisionGrid g;
    g.kind_ = Kind::Integers;
    g.lo_ = lo;
    g.hi_ = hi;
    return g;
}

DecisionGrid DecisionGrid::simplex(std::size_t assets, std::size_t divisions)
{
    if (assets < 1 || divisions < 1)
        throw std::invalid_argument("simplex grid needs assets >= 1 and divisions >= 1");
    DecisionGrid g;
    g.kind_ = Kind::Simplex;
    g.assets_ = assets;
    std::vector<std::size_t> current;
    enumerate_compositions(assets, divisions, current, [&](const std::vector<std::size_t>& c) {
        for (std::size_t n : c)
            g.values_.push_back(static_cast<double>(n) / static_cast<double>(divisions));
    });
    return g;
}

std::size_t DecisionGrid::size() const
{
    switch (kind_) {
    case Kind::Values: return values_.size();
    case Kind::Integers: return hi_ < lo_ ? 0 : static_cast<std::size_t>(hi_ - lo_ + 1);
    case Kind::Simplex: return assets_ == 0 ? 0 : values_.size() / assets_;
    }
    return 0;
}

double DecisionGrid::scalar(std::size_t i) const
{
    switch (kind_) {
    case Kind::Values: return values_[i];
    case Kind::Integers: return static_cast<double>(lo_ + static_cast<std::int64_t>(i));
    case Kind::Simplex: break;
    }
    throw std::logic_error("scalar() called on a simplex grid");
}

std::span<const double> DecisionGrid::point(std::size_t i) const
{
    if (kind_ != Kind::Simplex)
        throw std::logic_error("point() called on a scalar grid");
    return {values_.data() + i * assets_, assets_};
}

std::optional<std::size_t> DecisionGrid::index_of(double value) const
{
    switch (kind_) {
    case Kind::Values:
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (std::abs(values_[i] - value) <= kGridMatchTol)
                return i;
        return std::nullopt;
    case Kind::Integers: {
        const double r = std::round(value);
        if (std::abs(r - value) > kGridMatchTol)
            return std::nullopt;
        const auto v = static_cast<std::int64_t>(r);
        if (v < lo_ || v > hi_)
            return std::nullopt;
        return static_cast<std::size_t>(v - lo_);
    }
    case Kind::Simplex: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::size_t> DecisionGrid::index_of(std::span<const double> p) const
{
    if (kind_ != Kind::Simplex) {
        if (p.size() == 1)
            return index_of(p[0]);
        return std::nullopt;
    }
    if (p.size() != assets_)
        return std::nullopt;
    for (std::size_t i = 0; i < size(); ++i) {
        const auto q = point(i);
        bool same = true;
        for (std::size_t a = 0; a < assets_ && same; ++a)
            same = std::abs(q[a] - p[a]) <= kGridMatchTol;
        if (same)
            return i;
    }
    return std::nullopt;
}

double DecisionGrid::min_scalar() const
{
    if (kind_ == Kind::Integers)
        return static_cast<double>(lo_);
    return *std::min_element(values_.begin(), values_.end());
}

double DecisionGrid::max_scalar() const
{
    if (kind_ == Kind::Integers)
        return static_cast<double>(hi_);
    return *std::max_element(values_.begin(), values_.end());
}

DecisionGrid GridSpec::build() const
{
    switch (kind) {
    case Kind::Values: return DecisionGrid::values(values);
    case Kind::Range: return DecisionGrid::range(start, stop, step);
    case Kind::Integers: return DecisionGrid::integers(lo, hi);
    case Kind::Simplex: return DecisionGrid::simplex(assets, divisions);
    }
    return {};
}

// ---------------------------------------------------------------------------
// names

std::string_view to_string(LossKind kind)
{
    switch (kind) {
    case LossKind::Quadratic: return "quadratic";
    case LossKind::LpPrediction: return "lp_prediction";
    case LossKind::LogPortfolio: return "log_portfolio";
    case LossKind::Interval: return "interval";
    case LossKind::BitLoss: return "bit_loss";
    case LossKind::LookaheadIndex: return "lookahead_index";
    }
    return "unknown";
}

LossKind loss_kind_from_string(std::string_view name)
{
    for (auto k : {LossKind::Quadratic, LossKind::LpPrediction, LossKind::LogPortfolio, LossKind::Interval,
                   LossKind::BitLoss, LossKind::LookaheadIndex})
        if (to_string(k) == name)
            return k;
    throw std::invalid_argument("unknown loss kind '" + std::string(name) + "'");
}

std::string_view to_string(FeatureSpec::Kind kind)
{
    switch (kind) {
    case FeatureSpec::Kind::Identity: return "identity";
    case FeatureSpec::Kind::PairFirst: return "pair_first";
    case FeatureSpec::Kind::Dyadic: return "dyadic";
    case FeatureSpec::Kind::Table: return "table";
    }
    return "unknown";
}

FeatureSpec::Kind feature_kind_from_string(std::string_view name)
{
    for (auto k : {FeatureSpec::Kind::Identity, FeatureSpec::Kind::PairFirst, FeatureSpec::Kind::Dyadic,
                   FeatureSpec::Kind::Table})
        if (to_string(k) == name)
            return k;
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

double FeatureSpec::operator()(std::uint64_t x) const
{
    switch (kind) {
    case Kind::Identity: return static_cast<double>(x);
    case Kind::PairFirst: return static_cast<double>((x >> 1) & 1U);
    case Kind::Dyadic: return dyadic_value(x, bit_depth);
    case Kind::Table: return table.at(x);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// LossFunction

LossFunction::LossFunction(LossSpec spec) : spec_(std::move(spec)), grid_(spec_.grid.build())
{
    if (grid_.empty())
        throw std::invalid_argument("empty decision grid");
    switch (spec_.kind) {
    case LossKind::Quadratic:
    case LossKind::LpPrediction:
    case LossKind::Interval:
        if (grid_.kind() == DecisionGrid::Kind::Simplex)
            throw std::invalid_argument(std::string(to_string(spec_.kind)) + " needs a scalar decision grid");
        if (spec_.kind == LossKind::LpPrediction && !(spec_.exponent >= 1.0))
            throw std::invalid_argument("lp_prediction exponent must be >= 1");
        if (spec_.kind == LossKind::Interval && !(spec_.width > 0.0))
            throw std::invalid_argument("interval width must be > 0");
        break;
    case LossKind::LogPortfolio:
        if (grid_.kind() != DecisionGrid::Kind::Simplex)
            throw std::invalid_argument("log_portfolio needs a simplex decision grid");
        if (spec_.returns.cols() != grid_.assets())
            throw std::invalid_argument("log_portfolio: returns table has "
                                        + std::to_string(spec_.returns.cols()) + " assets, grid has "
                                        + std::to_string(grid_.assets()));
        for (double r : spec_.returns.data())
            if (!(r > 0.0))
                throw std::invalid_argument("log_portfolio: returns must be positive");
        break;
    case LossKind::BitLoss:
    case LossKind::LookaheadIndex: {
        if (grid_.kind() != DecisionGrid::Kind::Integers)
            throw std::invalid_argument(std::string(to_string(spec_.kind)) + " needs an integer decision grid");
        const double lo = grid_.min_scalar();
        const double hi = grid_.max_scalar();
        if (spec_.kind == LossKind::BitLoss) {
            if (lo < 1)
                throw std::invalid_argument("bit_loss decisions must be >= 1");
            window_.past = static_cast<std::size_t>(hi) - 1;
        } else {
            if (lo < 0)
                throw std::invalid_argument("lookahead_index decisions must be >= 0");
            window_.future = static_cast<std::size_t>(hi);
        }
        break;
    }
    }
}

bool LossFunction::state_only() const
{
    return spec_.kind != LossKind::BitLoss && spec_.kind != LossKind::LookaheadIndex;
}

double LossFunction::eval_state(std::size_t u, std::uint64_t x) const
{
    switch (spec_.kind) {
    case LossKind::Quadratic: {
        const double e = grid_.scalar(u) - spec_.feature(x);
        return e * e;
    }
    case LossKind::LpPrediction:
        return std::pow(std::abs(grid_.scalar(u) - spec_.feature(x)), spec_.exponent);
    case LossKind::Interval: {
        const double v = spec_.feature(x);
        const double lo = grid_.scalar(u);
        return (lo <= v && v < lo + spec_.width) ? 0.0 : 1.0;
    }
    case LossKind::LogPortfolio: {
        const auto w = grid_.point(u);
        const auto r = spec_.returns.row(static_cast<std::size_t>(x));
        double growth = 0.0;
        for (std::size_t a = 0; a < w.size(); ++a)
            growth += w[a] * r[a];
        return -std::log(growth);
    }
    case LossKind::BitLoss:
    case LossKind::LookaheadIndex: break;
    }
    throw std::logic_error(std::string(to_string(spec_.kind)) + " is not a state-only loss");
}

double LossFunction::eval(std::size_t u, const Path& path, std::size_t k) const
{
    switch (spec_.kind) {
    case LossKind::BitLoss: {
        const auto v = static_cast<std::int64_t>(grid_.scalar(u));
        const std::int64_t idx = static_cast<std::int64_t>(k) - v + 1;
        if (!path.noise.contains(idx))
            throw LossDomainError("window out of path range: bit_loss reads eps_" + std::to_string(idx)
                                  + " at k=" + std::to_string(k));
        return static_cast<double>(path.noise.at(idx));
    }
    case LossKind::LookaheadIndex: {
        const auto idx = k + static_cast<std::size_t>(grid_.scalar(u));
        if (idx >= path.size())
            throw LossDomainError("window out of path range: lookahead_index reads x_" + std::to_string(idx)
                                  + " on a path of length " + std::to_string(path.size()));
        return static_cast<double>(path.x[idx]);
    }
    default:
        if (k >= path.size())
            throw LossDomainError("window out of path range: k=" + std::to_string(k));
        return eval_state(u, path.x[k]);
    }
}

double LossFunction::bound_state(std::uint64_t x) const
{
    switch (spec_.kind) {
    case LossKind::Quadratic:
    case LossKind::LpPrediction: {
        // the loss is convex in u, so its maximum over a scalar grid sits at an end point
        std::size_t lo = 0, hi = 0;
        for (std::size_t i = 1; i < grid_.size(); ++i) {
            if (grid_.scalar(i) < grid_.scalar(lo))
                lo = i;
            if (grid_.scalar(i) > grid_.scalar(hi))
                hi = i;
        }
        return std::max(eval_state(lo, x), eval_state(hi, x));
    }
    case LossKind::LogPortfolio: {
        double s = 0.0;
        for (double r : spec_.returns.row(static_cast<std::size_t>(x)))
            s += std::abs(std::log(r));
        return s;
    }
    default: return 1.0;
    }
}

double LossFunction::bound(const Path& path, std::size_t k) const
{
    if (state_only()) {
        if (k >= path.size())
            throw LossDomainError("window out of path range: k=" + std::to_string(k));
        return bound_state(path.x[k]);
    }
    return 1.0;
}

std::string LossFunction::bound_description() const
{
    switch (spec_.kind) {
    case LossKind::Quadratic: return "max over grid end points of (u - f(x))^2";
    case LossKind::LpPrediction: return "max over grid end points of |u - f(x)|^p";
    case LossKind::LogPortfolio: return "sum_i |log r_i(x)|";
    case LossKind::Interval: return "1";
    case LossKind::BitLoss: return "1";
    case LossKind::LookaheadIndex: return "1";
    }
    return "";
}

double eval_loss(const LossFunction& loss, std::size_t u, const Path& path, std::size_t k)
{
    if (u >= loss.grid().size())
        throw LossDomainError("decision outside grid: index " + std::to_string(u));
    const LossWindow w = loss.window();
    if (loss.kind() != LossKind::BitLoss && (k < w.past || k + w.future >= path.size()))
        throw LossDomainError("window out of path range at k=" + std::to_string(k));
    return loss.eval(u, path, k);
}

double expected_loss_under_belief(const LossFunction& loss, std::size_t u, const Belief& belief)
{
    if (!loss.state_only())
        throw std::invalid_argument("expected_loss_under_belief: loss window is not state-only");
    if (u >= loss.grid().size())
        throw LossDomainError("decision outside grid: index " + std::to_string(u));
    double s = 0.0;
    for (std::size_t x = 0; x < belief.size(); ++x)
        if (belief.p[x] != 0.0)
            s += belief.p[x] * loss.eval_state(u, x);
    return s;
}

Matrix state_loss_table(const LossFunction& loss, std::size_t states)
{
    Matrix t(loss.grid().size(), states);
    for (std::size_t u = 0; u < t.rows(); ++u)
        for (std::size_t x = 0; x < states; ++x)
            t(u, x) = loss.eval_state(u, x);
    return t;
}

} // namespace pathopt
