#include "capforge/history.hpp"

#include "capforge/error.hpp"
#include "capforge/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capforge {

namespace {

bool register_scene(ContextHistory& history, ContextScene scene)
{
    scene.seq = history.next_seq();
    scene.day = history.open_day();
    if (!history.empty()) {
        const auto& last = history.back();
        if (last.day == scene.day && last.assignments == scene.assignments)
            return false;
    }
    history.push(std::move(scene));
    return true;
}

std::optional<std::size_t> time_factor(const Environment& env)
{
    for (std::size_t f = 0; f < env.size(); ++f)
        if (env.factor(f).kind == FactorKind::Time)
            return f;
    return std::nullopt;
}

template <class T>
void shuffle(std::vector<T>& items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i)
        std::swap(items[i - 1], items[rng.below(i)]);
}

ContextHistory subset(const ContextHistory& history, const std::vector<bool>& take, bool value)
{
    ContextHistory out(history.env_ref());
    for (std::size_t i = 0; i < history.size(); ++i)
        if (take[i] == value)
            out.push(history[i]);
    return out;
}

HistorySplit split_by_days(const ContextHistory& history, double fraction)
{
    std::vector<int> days;
    for (const auto& scene : history.scenes())
        if (days.empty() || days.back() != *scene.day)
            days.push_back(*scene.day);

    const double target = fraction * static_cast<double>(history.size());
    std::size_t best_days = 1;
    double best_gap = -1.0;
    std::size_t cursor = 0;
    for (std::size_t k = 1; k < days.size(); ++k) {
        while (cursor < history.size() && *history[cursor].day == days[k - 1])
            ++cursor;
        const double gap = std::abs(static_cast<double>(cursor) - target);
        if (best_gap < 0.0 || gap < best_gap) {
            best_gap = gap;
            best_days = k;
        }
    }

    std::vector<bool> in_train(history.size(), false);
    std::size_t day_index = 0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i > 0 && *history[i].day != *history[i - 1].day)
            ++day_index;
        in_train[i] = day_index < best_days;
    }
    return {subset(history, in_train, true), subset(history, in_train, false)};
}

} // namespace

int ContextHistory::begin_day()
{
    int next = 0;
    if (open_day_)
        next = *open_day_ + 1;
    else if (!scenes_.empty() && scenes_.back().day)
        next = *scenes_.back().day + 1;
    open_day_ = next;
    return next;
}

void ContextHistory::push(ContextScene scene)
{
    if (!scenes_.empty() && scene.seq <= scenes_.back().seq)
        throw Error(ErrorCode::NonMonotonicSeq, std::to_string(scene.seq));
    if (scene.day && (!open_day_ || *open_day_ < *scene.day))
        open_day_ = scene.day;
    scenes_.push_back(std::move(scene));
}

bool append_scene(ContextHistory& history, const Environment& env, const PartialAssignment& partial)
{
    if (history.env_ref() != env.ref())
        throw Error(ErrorCode::EnvironmentMismatch, history.env_ref());
    return register_scene(history, normalize_scene(partial, env, history.next_seq()));
}

HistorySplit split_history(const ContextHistory& history,
                           double train_fraction,
                           std::uint64_t seed,
                           const Environment* env,
                           const std::optional<InstanceRef>& stratify_on)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "train_fraction", "must lie strictly between 0 and 1");
    const std::size_t n = history.size();
    if (n < 2)
        throw Error(ErrorCode::HistoryTooSmall, std::to_string(n), "need at least one scene on each side");

    const bool all_days = std::all_of(history.scenes().begin(), history.scenes().end(),
                                      [](const ContextScene& s) { return s.day.has_value(); });
    if (all_days && history.scenes().front().day != history.back().day)
        return split_by_days(history, train_fraction);

    auto train_count = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    train_count = std::clamp<std::size_t>(train_count, 1, n - 1);

    // Strata: presence of the stratification instance, or a single stratum.
    std::vector<std::vector<std::size_t>> strata(1);
    if (stratify_on) {
        if (env == nullptr)
            throw Error(ErrorCode::InvalidArgument, "stratify_on", "stratification needs the environment");
        const auto f = env->factor_index(stratify_on->factor);
        const auto v = env->instance_index(f, stratify_on->instance);
        strata.assign(2, {});
        for (std::size_t i = 0; i < n; ++i)
            strata[history[i].assignments.at(f) == v ? 1 : 0].push_back(i);
    } else {
        strata[0].resize(n);
        std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
    }

    // Largest-remainder allocation of train_count across strata.
    std::vector<std::size_t> quota(strata.size());
    std::vector<std::size_t> remainder(strata.size());
    std::size_t allocated = 0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        quota[s] = train_count * strata[s].size() / n;
        remainder[s] = train_count * strata[s].size() % n;
        allocated += quota[s];
    }
    std::vector<std::size_t> order(strata.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; allocated < train_count; ++k) {
        ++quota[order[k % order.size()]];
        ++allocated;
    }

    Rng rng(seed);
    std::vector<bool> in_train(n, false);
    for (std::size_t s = 0; s < strata.size(); ++s) {
        auto members = strata[s];
        shuffle(members, rng);
        for (std::size_t k = 0; k < quota[s]; ++k)
            in_train[members[k]] = true;
    }
    return {subset(history, in_train, true), subset(history, in_train, false)};
}

void validate_routine(const RoutineSpec& spec, const Environment& env)
{
    if (spec.days < 1)
        throw Error(ErrorCode::InvalidArgument, "days", "must be at least 1");
    if (!(spec.noise >= 0.0 && spec.noise <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "noise", "must lie in [0, 1]");
    if (spec.blocks.empty())
        throw Error(ErrorCode::InvalidArgument, "blocks", "routine has no blocks");

    const auto time = time_factor(env);
    for (const auto& block : spec.blocks) {
        if (block.options.empty())
            throw Error(ErrorCode::InvalidArgument, "options", "block has no options");
        if (!block.time.empty()) {
            if (!time)
                throw Error(ErrorCode::UnknownFactor, "time", "environment has no time factor");
            env.instance_index(*time, block.time);
        }
        for (const auto& option : block.options) {
            if (!(option.weight > 0.0) || !std::isfinite(option.weight))
                throw Error(ErrorCode::InvalidArgument, "weight", "weights must be positive");
            auto partial = option.assignment;
            if (!block.time.empty())
                partial[env.factor(*time).id] = block.time;
            normalize_scene(partial, env, 0);
        }
    }
}

ContextHistory synthesize_history(const RoutineSpec& spec, const Environment& env, SynthesisStats* stats)
{
    validate_routine(spec, env);
    const auto time = time_factor(env);

    // Options are normalized once; drawing is index based.
    struct Block {
        std::vector<double> cumulative;
        std::vector<ContextScene> scenes;
    };
    std::vector<Block> blocks;
    for (const auto& block : spec.blocks) {
        Block b;
        double total = 0.0;
        for (const auto& option : block.options) {
            auto partial = option.assignment;
            if (!block.time.empty())
                partial[env.factor(*time).id] = block.time;
            total += option.weight;
            b.cumulative.push_back(total);
            b.scenes.push_back(normalize_scene(partial, env, 0));
        }
        blocks.push_back(std::move(b));
    }

    Rng rng(spec.seed);
    ContextHistory history(env.ref());
    SynthesisStats local;
    for (int day = 0; day < spec.days; ++day) {
        history.begin_day();
        for (const auto& block : blocks) {
            const double pick = rng.unit() * block.cumulative.back();
            const auto chosen = static_cast<std::size_t>(
                std::upper_bound(block.cumulative.begin(), block.cumulative.end(), pick) - block.cumulative.begin());
            ContextScene scene = block.scenes[std::min(chosen, block.scenes.size() - 1)];
            for (std::size_t f = 0; f < env.size(); ++f) {
                ++local.slots;
                if (rng.chance(spec.noise)) {
                    ++local.perturbed;
                    scene.assignments[f] = rng.below(env.factor(f).instances.size());
                }
            }
            register_scene(history, std::move(scene));
        }
    }
    if (stats != nullptr)
        *stats = local;
    return history;
}

SizeVerdict check_minimum_size(const ContextHistory& history, const Environment& env)
{
    SizeVerdict verdict;
    verdict.required = 10 * env.size();
    verdict.actual = history.size();
    verdict.ok = verdict.actual >= verdict.required;
    return verdict;
}

} // namespace capforge
