#include "pathopt/strategies.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "pathopt/errors.hpp"
#include "pathopt/rng.hpp"

namespace pathopt {

namespace {

std::size_t grid_index(const DecisionGrid& grid, double value, std::string_view who)
{
    const auto idx = grid.index_of(value);
    if (!idx) {
        std::ostringstream os;
        os << who << ": decision " << value << " is not on the decision grid";
        throw StrategyError(os.str());
    }
    return *idx;
}

const FiniteHmm& require_finite(const ProcessModel& model, std::string_view who)
{
    if (!model.finite_hmm())
        throw StrategyError(std::string(who) + " requires a finite-state model");
    return *model.finite_hmm();
}

void require_state_only(const LossFunction& loss, std::string_view who)
{
    if (!loss.state_only())
        throw StrategyError(std::string(who) + " requires a state-only loss");
}

// Rescale so that the largest entry is 1; the filters only need ratios.
void rescale(Matrix& m)
{
    double mx = 0.0;
    for (double v : m.data())
        mx = std::max(mx, v);
    if (mx > 0.0)
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (double& v : m.row(i))
                v /= mx;
}

// ---------------------------------------------------------------------------

class ConstantStrategy final : public Strategy {
public:
    ConstantStrategy(std::string name, std::size_t index) : Strategy(std::move(name)), index_(index) {}
    std::size_t decide(std::size_t, std::span<const int>) override { return index_; }
    void reset(std::uint64_t) override {}
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<ConstantStrategy>(*this); }

private:
    std::size_t index_;
};

class AlternatingStrategy final : public Strategy {
public:
    AlternatingStrategy(std::string name, const DecisionGrid& grid)
        : Strategy(std::move(name)), even_(grid_index(grid, 0.0, "alternating")),
          odd_(grid_index(grid, 1.0, "alternating")) {}
    std::size_t decide(std::size_t k, std::span<const int>) override { return k % 2 == 0 ? even_ : odd_; }
    void reset(std::uint64_t) override {}
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<AlternatingStrategy>(*this); }

private:
    std::size_t even_, odd_;
};

class ParityStrategy final : public Strategy {
public:
    ParityStrategy(std::string name, const DecisionGrid& grid)
        : Strategy(std::move(name)), zero_(grid_index(grid, 0.0, "parity")), one_(grid_index(grid, 1.0, "parity")) {}

    std::size_t decide(std::size_t k, std::span<const int> y) override
    {
        // running sum of y_1 .. y_{k-1}
        const std::size_t upto = k == 0 ? 1 : k;
        if (upto < summed_to_)
            reset(0);
        for (; summed_to_ < upto; ++summed_to_)
            sum_ += y[summed_to_];
        return (sum_ % 2 == 0) ? zero_ : one_;
    }
    void reset(std::uint64_t) override
    {
        summed_to_ = 1;
        sum_ = 0;
    }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<ParityStrategy>(*this); }

private:
    std::size_t zero_, one_;
    std::size_t summed_to_ = 1;
    long long sum_ = 0;
};

class DelayShiftStrategy final : public Strategy {
public:
    DelayShiftStrategy(std::string name, const DecisionGrid& grid, int shift)
        : Strategy(std::move(name)), grid_(grid), shift_(shift) {}
    std::size_t decide(std::size_t k, std::span<const int>) override
    {
        return grid_index(grid_, static_cast<double>(static_cast<long long>(k) + shift_), "delay_shift");
    }
    void reset(std::uint64_t) override {}
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<DelayShiftStrategy>(*this); }

private:
    DecisionGrid grid_;
    int shift_;
};

class BlockLookaheadStrategy final : public Strategy {
public:
    BlockLookaheadStrategy(std::string name, const DecisionGrid& grid, int shift)
        : Strategy(std::move(name)), grid_(grid), shift_(shift)
    {
        if (shift < 0)
            throw StrategyError("block_lookahead: r must be >= 0");
    }
    std::size_t decide(std::size_t k, std::span<const int>) override
    {
        if (k == 0)
            throw StrategyError("block_lookahead is defined for k >= 1");
        const auto n = static_cast<int>(std::bit_width(k)) - 1; // 2^n <= k < 2^{n+1}
        const std::uint64_t target = std::uint64_t{1} << (shift_ + n + 1);
        return grid_index(grid_, static_cast<double>(target - k), "block_lookahead");
    }
    void reset(std::uint64_t) override {}
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<BlockLookaheadStrategy>(*this); }

private:
    DecisionGrid grid_;
    int shift_;
};

class MeanOptimalExactStrategy final : public Strategy {
public:
    MeanOptimalExactStrategy(std::string name, const ProcessModel& model, const LossFunction& loss)
        : Strategy(std::move(name)), hmm_(require_finite(model, "mean_optimal_exact"))
    {
        require_state_only(loss, "mean_optimal_exact");
        table_ = state_loss_table(loss, hmm_.states());
        reset(0);
    }

    std::size_t decide(std::size_t k, std::span<const int> y) override
    {
        if (k + 1 < consumed_)
            reset(0);
        for (; consumed_ <= k; ++consumed_)
            belief_ = filter_update(hmm_, belief_, y[consumed_], consumed_);
        return argmin_expected_loss(table_, belief_.p);
    }
    void reset(std::uint64_t) override
    {
        belief_ = stationary_belief(hmm_);
        consumed_ = 0;
    }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<MeanOptimalExactStrategy>(*this); }

private:
    FiniteHmm hmm_;
    Matrix table_;
    Belief belief_;
    std::size_t consumed_ = 0;
};

class MeanOptimalParticleStrategy final : public Strategy {
public:
    MeanOptimalParticleStrategy(std::string name, const ProcessModel& model, const LossFunction& loss,
                                std::size_t particles, std::uint64_t seed)
        : Strategy(std::move(name)), model_(model), loss_(loss), particles_(particles), base_seed_(seed)
    {
        require_state_only(loss, "mean_optimal_particle");
        if (particles < 1)
            throw StrategyError("mean_optimal_particle: particle count must be >= 1");
        if (const FiniteHmm* h = model.finite_hmm())
            table_ = state_loss_table(loss, h->states());
        reset(0);
    }

    std::size_t decide(std::size_t k, std::span<const int> y) override
    {
        if (k + 1 < consumed_)
            reset(run_seed_);
        for (; consumed_ <= k; ++consumed_) {
            const std::uint64_t step_seed = derive_seed(run_seed_, consumed_);
            ensemble_ = consumed_ == 0 ? initial_ensemble(model_, particles_, y[0], step_seed)
                                       : particle_update(model_, ensemble_, y[consumed_], step_seed);
        }
        if (!table_.empty())
            return argmin_expected_loss(table_, ensemble_belief(ensemble_, table_.cols()).p);
        std::size_t best = 0;
        double best_value = 0.0;
        for (std::size_t u = 0; u < loss_.grid().size(); ++u) {
            double s = 0.0;
            for (std::size_t i = 0; i < ensemble_.size(); ++i)
                s += ensemble_.weights[i] * loss_.eval_state(u, ensemble_.states[i]);
            if (u == 0 || s < best_value) {
                best = u;
                best_value = s;
            }
        }
        return best;
    }
    void reset(std::uint64_t seed) override
    {
        run_seed_ = derive_seed(base_seed_, seed);
        consumed_ = 0;
        ensemble_ = {};
    }
    std::unique_ptr<Strategy> clone() const override
    {
        return std::make_unique<MeanOptimalParticleStrategy>(*this);
    }

private:
    ProcessModel model_;
    LossFunction loss_;
    std::size_t particles_;
    std::uint64_t base_seed_;
    std::uint64_t run_seed_ = 0;
    Matrix table_;
    ParticleEnsemble ensemble_;
    std::size_t consumed_ = 0;
};

/// Sliding product of A_j = P diag(Phi(., y_j)) over a window of indices,
/// kept as a two-stack queue so that each shift costs O(d^3) amortized.
class SlidingProduct {
public:
    explicit SlidingProduct(std::size_t d) : d_(d), back_product_(Matrix::identity(d)) {}

    void push(Matrix a)
    {
        back_product_ = back_product_ * a;
        rescale(back_product_);
        back_.push_back(std::move(a));
    }

    void pop()
    {
        if (front_.empty()) {
            // suffix products of the back stack; front_.back() is the oldest element
            Matrix suffix = Matrix::identity(d_);
            for (auto it = back_.rbegin(); it != back_.rend(); ++it) {
                suffix = *it * suffix;
                rescale(suffix);
                front_.push_back(suffix);
            }
            back_.clear();
            back_product_ = Matrix::identity(d_);
        }
        front_.pop_back();
    }

    std::size_t size() const { return front_.size() + back_.size(); }

    std::vector<double> apply(std::span<const double> v) const
    {
        std::vector<double> out(v.begin(), v.end());
        if (!front_.empty())
            out = left_multiply(out, front_.back());
        return left_multiply(out, back_product_);
    }

    void clear()
    {
        front_.clear();
        back_.clear();
        back_product_ = Matrix::identity(d_);
    }

private:
    std::size_t d_;
    std::vector<Matrix> front_;
    std::vector<Matrix> back_;
    Matrix back_product_;
};

class FrozenWindowStrategy final : public Strategy {
public:
    FrozenWindowStrategy(std::string name, const ProcessModel& model, const LossFunction& loss,
                         std::vector<std::size_t> schedule)
        : Strategy(std::move(name)), hmm_(require_finite(model, "frozen_window")),
          schedule_(std::move(schedule)), window_(hmm_.states())
    {
        require_state_only(loss, "frozen_window");
        if (schedule_.empty())
            throw StrategyError("frozen_window: schedule must not be empty");
        if (schedule_.front() < 1)
            throw StrategyError("frozen_window: schedule must start at k_1 >= 1");
        for (std::size_t i = 1; i < schedule_.size(); ++i)
            if (schedule_[i] <= schedule_[i - 1])
                throw StrategyError("frozen_window: schedule must be strictly increasing");
        table_ = state_loss_table(loss, hmm_.states());
    }

    /// Window length k_n in force at time k (the whole prefix before k_1).
    std::size_t window_length(std::size_t k) const
    {
        auto it = std::upper_bound(schedule_.begin(), schedule_.end(), k);
        if (it == schedule_.begin())
            return k;
        return *std::prev(it);
    }

    std::size_t decide(std::size_t k, std::span<const int> y) override
    {
        if (k + 1 < next_)
            reset(0);
        // invariant: window_ holds A_{start_+1} .. A_{next_-1}
        const std::size_t start = k - window_length(k);
        if (start < start_) {
            // a longer window took over: rebuild from the new left edge
            window_.clear();
            start_ = start;
            for (std::size_t j = start + 1; j < next_; ++j)
                window_.push(step_matrix(y[j]));
        }
        for (; next_ <= k; ++next_)
            if (next_ > start_)
                window_.push(step_matrix(y[next_]));
        while (start_ < start) {
            window_.pop();
            ++start_;
        }
        const std::size_t d = hmm_.states();
        std::vector<double> v(d);
        const auto y0 = static_cast<std::size_t>(y[start_]);
        if (y0 >= hmm_.symbols())
            throw std::out_of_range("observation outside alphabet");
        for (std::size_t x = 0; x < d; ++x)
            v[x] = hmm_.stationary[x] * hmm_.emission(x, y0);
        auto p = window_.apply(v);
        double total = 0.0;
        for (double q : p)
            total += q;
        if (!(total > 0.0))
            throw DegenerateObservation(k);
        for (double& q : p)
            q /= total;
        return argmin_expected_loss(table_, p);
    }

    void reset(std::uint64_t) override
    {
        window_.clear();
        next_ = 0;
        start_ = 0;
    }

    std::unique_ptr<Strategy> clone() const override { return std::make_unique<FrozenWindowStrategy>(*this); }

private:
    Matrix step_matrix(int y) const
    {
        if (y < 0 || static_cast<std::size_t>(y) >= hmm_.symbols())
            throw std::out_of_range("observation outside alphabet");
        const std::size_t d = hmm_.states();
        Matrix a(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                a(i, j) = hmm_.transition(i, j) * hmm_.emission(j, static_cast<std::size_t>(y));
        return a;
    }

    FiniteHmm hmm_;
    std::vector<std::size_t> schedule_;
    Matrix table_;
    SlidingProduct window_;
    std::size_t next_ = 0;  ///< next observation index to push
    std::size_t start_ = 0; ///< window covers y_start .. y_{next-1}
};

std::string format_number(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

std::string_view to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::Constant: return "constant";
    case StrategyKind::Alternating: return "alternating";
    case StrategyKind::Parity: return "parity";
    case StrategyKind::DelayShift: return "delay_shift";
    case StrategyKind::BlockLookahead: return "block_lookahead";
    case StrategyKind::MeanOptimalExact: return "mean_optimal_exact";
    case StrategyKind::MeanOptimalParticle: return "mean_optimal_particle";
    case StrategyKind::FrozenWindow: return "frozen_window";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_string(std::string_view name)
{
    for (auto k : {StrategyKind::Constant, StrategyKind::Alternating, StrategyKind::Parity,
                   StrategyKind::DelayShift, StrategyKind::BlockLookahead, StrategyKind::MeanOptimalExact,
                   StrategyKind::MeanOptimalParticle, StrategyKind::FrozenWindow})
        if (to_string(k) == name)
            return k;
    throw StrategyError("unknown strategy kind '" + std::string(name) + "'");
}

std::string StrategySpec::label() const
{
    if (!name.empty())
        return name;
    std::string base(to_string(kind));
    switch (kind) {
    case StrategyKind::Constant:
        if (!weights.empty()) {
            std::string s = base + "(";
            for (std::size_t i = 0; i < weights.size(); ++i)
                s += (i ? ";" : "") + format_number(weights[i]);
            return s + ")";
        }
        return base + "(" + format_number(value) + ")";
    case StrategyKind::DelayShift:
    case StrategyKind::BlockLookahead: return base + "(" + std::to_string(shift) + ")";
    case StrategyKind::MeanOptimalParticle: return base + "(" + std::to_string(particles) + ")";
    case StrategyKind::FrozenWindow: {
        std::string s = base + "(";
        for (std::size_t i = 0; i < schedule.size(); ++i)
            s += (i ? ";" : "") + std::to_string(schedule[i]);
        return s + ")";
    }
    default: return base;
    }
}

std::size_t argmin_expected_loss(const Matrix& table, std::span<const double> belief)
{
    if (table.rows() == 0)
        throw StrategyError("empty decision grid");
    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t u = 0; u < table.rows(); ++u) {
        const auto row = table.row(u);
        double s = 0.0;
        for (std::size_t x = 0; x < belief.size(); ++x)
            s += belief[x] * row[x];
        if (u == 0 || s < best_value) {
            best = u;
            best_value = s;
        }
    }
    return best;
}

std::size_t mean_optimal_decision(const Belief& belief, const LossFunction& loss)
{
    if (loss.grid().empty())
        throw StrategyError("empty decision grid");
    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t u = 0; u < loss.grid().size(); ++u) {
        const double s = expected_loss_under_belief(loss, u, belief);
        if (u == 0 || s < best_value) {
            best = u;
            best_value = s;
        }
    }
    return best;
}

std::unique_ptr<Strategy> make_frozen_window(const LossFunction& loss, const ProcessModel& model,
                                             std::vector<std::size_t> schedule)
{
    StrategySpec spec;
    spec.kind = StrategyKind::FrozenWindow;
    spec.schedule = schedule;
    return std::make_unique<FrozenWindowStrategy>(spec.label(), model, loss, std::move(schedule));
}

std::vector<std::size_t> geometric_schedule(std::size_t limit)
{
    std::vector<std::size_t> s{1};
    while (s.back() < limit)
        s.push_back(s.back() * 2);
    return s;
}

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, const ProcessModel& model,
                                        const LossFunction& loss)
{
    const std::string name = spec.label();
    const DecisionGrid& grid = loss.grid();
    switch (spec.kind) {
    case StrategyKind::Constant: {
        std::size_t idx = 0;
        if (grid.kind() == DecisionGrid::Kind::Simplex) {
            const auto found = grid.index_of(std::span<const double>(spec.weights));
            if (!found)
                throw StrategyError("constant: portfolio weights are not on the simplex grid");
            idx = *found;
        } else {
            idx = grid_index(grid, spec.value, "constant");
        }
        return std::make_unique<ConstantStrategy>(name, idx);
    }
    case StrategyKind::Alternating: return std::make_unique<AlternatingStrategy>(name, grid);
    case StrategyKind::Parity: return std::make_unique<ParityStrategy>(name, grid);
    case StrategyKind::DelayShift: return std::make_unique<DelayShiftStrategy>(name, grid, spec.shift);
    case StrategyKind::BlockLookahead: return std::make_unique<BlockLookaheadStrategy>(name, grid, spec.shift);
    case StrategyKind::MeanOptimalExact: return std::make_unique<MeanOptimalExactStrategy>(name, model, loss);
    case StrategyKind::MeanOptimalParticle:
        return std::make_unique<MeanOptimalParticleStrategy>(name, model, loss, spec.particles, spec.seed);
    case StrategyKind::FrozenWindow:
        return std::make_unique<FrozenWindowStrategy>(name, model, loss, spec.schedule);
    }
    throw StrategyError("unknown strategy kind");
}

} // namespace pathopt
