#include "capforge/context_model.hpp"

#include "capforge/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <unordered_set>

namespace capforge {

namespace {

constexpr std::array<std::pair<FactorKind, std::string_view>, 6> kKindNames{{
    {FactorKind::Time, "time"},
    {FactorKind::Location, "location"},
    {FactorKind::Activity, "activity"},
    {FactorKind::UserState, "user_state"},
    {FactorKind::ObjectState, "object_state"},
    {FactorKind::DigitalState, "digital_state"},
}};

class Fnv1a {
public:
    void add(std::string_view text)
    {
        for (unsigned char c : text) {
            hash_ ^= c;
            hash_ *= 0x100000001B3ULL;
        }
        // field separator
        hash_ ^= 0xFF;
        hash_ *= 0x100000001B3ULL;
    }

    void add(double value)
    {
        std::array<char, 32> buf{};
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
        add(std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data())));
    }

    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

bool spatial(FactorKind kind)
{
    return kind == FactorKind::Location || kind == FactorKind::Activity || kind == FactorKind::ObjectState;
}

void resolve_default(ContextFactor& factor)
{
    if (factor.default_instance)
        return;
    switch (factor.kind) {
    case FactorKind::Time:
        return;
    case FactorKind::Location:
    case FactorKind::Activity:
    case FactorKind::UserState:
        if (std::find(factor.instances.begin(), factor.instances.end(), kNoneInstance) == factor.instances.end())
            factor.instances.emplace_back(kNoneInstance);
        factor.default_instance = std::string(kNoneInstance);
        return;
    case FactorKind::ObjectState:
    case FactorKind::DigitalState:
        factor.default_instance = factor.instances.front();
        return;
    }
}

} // namespace

std::string_view to_string(FactorKind kind) noexcept
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "unknown";
}

std::optional<FactorKind> parse_factor_kind(std::string_view text) noexcept
{
    for (const auto& [k, name] : kKindNames)
        if (name == text)
            return k;
    return std::nullopt;
}

std::vector<std::string> default_time_instances()
{
    return {"early-morning", "morning", "noon", "afternoon", "evening", "night"};
}

std::optional<std::size_t> Environment::find_factor(std::string_view id) const
{
    auto it = factor_lookup_.find(std::string(id));
    if (it == factor_lookup_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Environment::find_instance(std::size_t factor, std::string_view id) const
{
    const auto& lookup = instance_lookup_.at(factor);
    auto it = lookup.find(std::string(id));
    if (it == lookup.end())
        return std::nullopt;
    return it->second;
}

std::size_t Environment::factor_index(std::string_view id) const
{
    if (auto idx = find_factor(id))
        return *idx;
    throw Error(ErrorCode::UnknownFactor, std::string(id));
}

std::size_t Environment::instance_index(std::size_t factor, std::string_view id) const
{
    if (auto idx = find_instance(factor, id))
        return *idx;
    throw Error(ErrorCode::UnknownInstance, config_.factors.at(factor).id + "=" + std::string(id));
}

std::string Environment::ref() const
{
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(fingerprint_));
    return std::string(buf.data());
}

Environment validate_environment(EnvironmentConfig raw)
{
    Environment env;
    std::unordered_set<std::string> seen_factors;
    bool any_controllable = false;

    for (auto& factor : raw.factors) {
        if (factor.id.empty())
            throw Error(ErrorCode::InvalidIdentifier, factor.id, "factor id must be nonempty");
        if (!seen_factors.insert(factor.id).second)
            throw Error(ErrorCode::DuplicateFactorId, factor.id);
        if (factor.instances.empty())
            throw Error(ErrorCode::EmptyInstanceSet, factor.id);

        std::unordered_set<std::string> seen_instances;
        for (const auto& instance : factor.instances) {
            if (instance.empty())
                throw Error(ErrorCode::InvalidIdentifier, factor.id, "instance id must be nonempty");
            if (!seen_instances.insert(instance).second)
                throw Error(ErrorCode::DuplicateInstance, factor.id, instance);
        }
        if (factor.default_instance && !seen_instances.contains(*factor.default_instance))
            throw Error(ErrorCode::BadDefault, factor.id, *factor.default_instance);
        if (factor.controllable && factor.kind != FactorKind::ObjectState)
            throw Error(ErrorCode::BadControllable, factor.id, "only object states can be controllable");
        if (factor.anchor && !spatial(factor.kind))
            throw Error(ErrorCode::BadAnchor, factor.id, "anchors apply to location, activity and object states");

        resolve_default(factor);
        any_controllable = any_controllable || factor.controllable;
    }
    if (!any_controllable)
        throw Error(ErrorCode::NoControllableFactor, raw.name);

    Fnv1a digest;
    digest.add(raw.name);
    env.instance_lookup_.reserve(raw.factors.size());
    env.defaults_.reserve(raw.factors.size());
    for (std::size_t f = 0; f < raw.factors.size(); ++f) {
        const auto& factor = raw.factors[f];
        env.factor_lookup_.emplace(factor.id, f);
        auto& lookup = env.instance_lookup_.emplace_back();
        for (std::size_t i = 0; i < factor.instances.size(); ++i)
            lookup.emplace(factor.instances[i], i);
        env.defaults_.push_back(factor.default_instance
                ? std::optional<std::size_t>(lookup.at(*factor.default_instance))
                : std::nullopt);

        digest.add(factor.id);
        digest.add(to_string(factor.kind));
        for (const auto& instance : factor.instances)
            digest.add(instance);
        digest.add(factor.default_instance.value_or(""));
        digest.add(factor.controllable ? "c" : "-");
        if (factor.anchor) {
            digest.add(factor.anchor->x);
            digest.add(factor.anchor->y);
        }
    }
    env.fingerprint_ = digest.value();
    env.config_ = std::move(raw);
    return env;
}

ContextScene normalize_scene(const PartialAssignment& partial, const Environment& env, std::int64_t seq)
{
    ContextScene scene;
    scene.seq = seq;
    std::vector<std::optional<std::size_t>> chosen(env.size());
    for (const auto& [factor_id, instance_id] : partial) {
        const auto f = env.factor_index(factor_id);
        chosen[f] = env.instance_index(f, instance_id);
    }
    scene.assignments.reserve(env.size());
    for (std::size_t f = 0; f < env.size(); ++f) {
        if (!chosen[f])
            chosen[f] = env.default_index(f);
        if (!chosen[f])
            throw Error(ErrorCode::MissingFactor, env.factor(f).id, "factor has no default and must be specified");
        scene.assignments.push_back(*chosen[f]);
    }
    return scene;
}

std::vector<std::pair<std::string, std::string>> scene_labels(const ContextScene& scene, const Environment& env)
{
    if (scene.assignments.size() != env.size())
        throw Error(ErrorCode::EnvironmentMismatch, env.name(), "scene width differs from environment");
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(env.size());
    for (std::size_t f = 0; f < env.size(); ++f)
        out.emplace_back(env.factor(f).id, env.instance_name(f, scene.assignments[f]));
    return out;
}

bool TriggerClause::contains(std::size_t instance) const
{
    return std::binary_search(instances.begin(), instances.end(), instance);
}

const TriggerClause* ValidatedPolicy::clause_for(std::size_t factor) const noexcept
{
    for (const auto& clause : clauses_)
        if (clause.factor == factor)
            return &clause;
    return nullptr;
}

ValidatedPolicy validate_policy(const Policy& raw, const Environment& env)
{
    ValidatedPolicy out;
    out.env_fingerprint_ = env.fingerprint();
    out.factor_count_ = env.size();

    const auto action_factor = env.factor_index(raw.action.factor);
    const auto action_instance = env.instance_index(action_factor, raw.action.instance);
    if (!env.factor(action_factor).controllable)
        throw Error(ErrorCode::ActionNotControllable, raw.action.factor);
    if (raw.trigger.empty())
        throw Error(ErrorCode::EmptyTrigger, raw.id);

    std::vector<std::optional<TriggerClause>> by_factor(env.size());
    for (const auto& [factor_id, selected] : raw.trigger) {
        const auto f = env.factor_index(factor_id);
        if (f == action_factor)
            throw Error(ErrorCode::ActionFactorInTrigger, factor_id);
        if (selected.empty())
            throw Error(ErrorCode::EmptyTrigger, factor_id, "no instance selected");
        auto& clause = by_factor[f];
        if (!clause)
            clause = TriggerClause{f, {}};
        for (const auto& instance : selected)
            clause->instances.push_back(env.instance_index(f, instance));
    }

    out.policy_.id = raw.id;
    out.policy_.action = raw.action;
    out.action_factor_ = action_factor;
    out.action_instance_ = action_instance;
    for (auto& clause : by_factor) {
        if (!clause)
            continue;
        auto& idx = clause->instances;
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

        std::vector<std::string> names;
        names.reserve(idx.size());
        for (auto i : idx)
            names.push_back(env.instance_name(clause->factor, i));
        out.policy_.trigger.emplace_back(env.factor(clause->factor).id, std::move(names));
        out.clauses_.push_back(std::move(*clause));
    }
    return out;
}

} // namespace capforge
