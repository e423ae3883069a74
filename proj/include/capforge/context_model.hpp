#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace capforge {

enum class FactorKind { Time, Location, Activity, UserState, ObjectState, DigitalState };

std::string_view to_string(FactorKind kind) noexcept;
std::optional<FactorKind> parse_factor_kind(std::string_view text) noexcept;

/// Instance identifier reserved for "nothing detected" on location,
/// activity and user-state factors that declare no default.
inline constexpr std::string_view kNoneInstance = "none";

/// Time vocabulary used when a time factor declares no instances.
std::vector<std::string> default_time_instances();

struct Anchor {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Anchor&) const = default;
};

struct ContextFactor {
    std::string id;
    FactorKind kind = FactorKind::ObjectState;
    std::vector<std::string> instances;
    std::optional<std::string> default_instance;
    bool controllable = false;
    std::optional<Anchor> anchor;

    bool operator==(const ContextFactor&) const = default;
};

struct EnvironmentConfig {
    std::string name;
    std::vector<ContextFactor> factors;

    bool operator==(const EnvironmentConfig&) const = default;
};

/// A (factor, instance) pair, e.g. the action `tv = on`.
struct InstanceRef {
    std::string factor;
    std::string instance;

    auto operator<=>(const InstanceRef&) const = default;
};

/// Validated environment with frozen factor and instance indices.
/// Immutable after construction.
class Environment {
public:
    const std::string& name() const noexcept { return config_.name; }
    const EnvironmentConfig& config() const noexcept { return config_; }
    std::span<const ContextFactor> factors() const noexcept { return config_.factors; }
    std::size_t size() const noexcept { return config_.factors.size(); }
    const ContextFactor& factor(std::size_t index) const { return config_.factors.at(index); }

    std::optional<std::size_t> find_factor(std::string_view id) const;
    std::optional<std::size_t> find_instance(std::size_t factor, std::string_view id) const;

    // Throwing lookups: UnknownFactor / UnknownInstance.
    std::size_t factor_index(std::string_view id) const;
    std::size_t instance_index(std::size_t factor, std::string_view id) const;

    const std::string& instance_name(std::size_t factor, std::size_t instance) const
    {
        return config_.factors.at(factor).instances.at(instance);
    }

    /// Index of the factor's default instance; empty for factors (time)
    /// that every scene must specify.
    std::optional<std::size_t> default_index(std::size_t factor) const { return defaults_.at(factor); }

    /// Stable 64-bit digest of the validated configuration.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    /// Hex rendering of fingerprint(), used as a history's env_ref.
    std::string ref() const;

private:
    friend Environment validate_environment(EnvironmentConfig raw);

    EnvironmentConfig config_;
    std::unordered_map<std::string, std::size_t> factor_lookup_;
    std::vector<std::unordered_map<std::string, std::size_t>> instance_lookup_;
    std::vector<std::optional<std::size_t>> defaults_;
    std::uint64_t fingerprint_ = 0;
};

/// Checks every environment invariant and resolves kind-specific defaults.
/// Throws DuplicateFactorId, InvalidIdentifier, EmptyInstanceSet,
/// DuplicateInstance, BadDefault, BadControllable, BadAnchor or
/// NoControllableFactor naming the first offending factor.
Environment validate_environment(EnvironmentConfig raw);

using PartialAssignment = std::map<std::string, std::string>;

/// One instance per factor, indexed by the environment's factor order.
struct ContextScene {
    std::int64_t seq = 0;
    std::optional<int> day;
    std::vector<std::size_t> assignments;

    bool operator==(const ContextScene&) const = default;
};

/// Fills unspecified factors with their defaults. Throws UnknownFactor,
/// UnknownInstance, or MissingFactor when a factor without a default (time)
/// is left unspecified.
ContextScene normalize_scene(const PartialAssignment& partial, const Environment& env, std::int64_t seq);

/// Scene assignments rendered back to identifiers, in environment order.
std::vector<std::pair<std::string, std::string>> scene_labels(const ContextScene& scene, const Environment& env);

struct Policy {
    std::string id;
    InstanceRef action;
    /// factor -> selected instances; OR within a factor, AND across factors.
    std::vector<std::pair<std::string, std::vector<std::string>>> trigger;

    bool operator==(const Policy&) const = default;
};

struct TriggerClause {
    std::size_t factor = 0;
    /// Selected instance indices, ascending (environment order).
    std::vector<std::size_t> instances;

    bool contains(std::size_t instance) const;
    bool operator==(const TriggerClause&) const = default;
};

/// Policy checked against an environment. Trigger factors and their
/// instance sets are frozen to environment order.
class ValidatedPolicy {
public:
    const std::string& id() const noexcept { return policy_.id; }
    const Policy& policy() const noexcept { return policy_; }
    std::size_t action_factor() const noexcept { return action_factor_; }
    std::size_t action_instance() const noexcept { return action_instance_; }
    std::span<const TriggerClause> trigger() const noexcept { return clauses_; }
    const TriggerClause* clause_for(std::size_t factor) const noexcept;
    std::uint64_t environment() const noexcept { return env_fingerprint_; }
    std::size_t factor_count() const noexcept { return factor_count_; }

    bool operator==(const ValidatedPolicy&) const = default;

private:
    friend ValidatedPolicy validate_policy(const Policy& raw, const Environment& env);

    Policy policy_;
    std::size_t action_factor_ = 0;
    std::size_t action_instance_ = 0;
    std::vector<TriggerClause> clauses_;
    std::uint64_t env_fingerprint_ = 0;
    std::size_t factor_count_ = 0;
};

/// Throws EmptyTrigger, ActionNotControllable, ActionFactorInTrigger,
/// UnknownFactor or UnknownInstance. Duplicate instances in a selection
/// collapse; an empty selection for a factor is EmptyTrigger(factor).
ValidatedPolicy validate_policy(const Policy& raw, const Environment& env);

} // namespace capforge
