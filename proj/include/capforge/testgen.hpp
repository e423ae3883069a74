#pragma once

#include "capforge/association.hpp"
#include "capforge/context_model.hpp"
#include "capforge/policy_engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace capforge {

/// Outcome of the correlation assessment for one candidate factor.
enum class Condition {
    CorrelatedMissing = 1,    ///< high U, factor absent from the trigger
    UncorrelatedIncluded = 2, ///< low U, factor constrained by the trigger
    CorrelatedIncluded = 3,   ///< high U, factor constrained by the trigger
    UncorrelatedMissing = 4,  ///< low U, absent: never produces a case
};

struct GenerationConfig {
    /// A factor is correlated when U > threshold (strict).
    double threshold = 0.5;
    std::uint64_t seed = 0;
};

struct TestCase {
    std::string id;
    std::string policy_id;
    std::string focus_factor;
    Condition condition = Condition::CorrelatedMissing;
    InstanceRef suggested;
    /// One selected instance per other trigger factor, in environment order.
    std::vector<std::pair<std::string, std::string>> fillers;
    std::string rationale;

    /// Number of instances the case shows: fillers plus the suggestion.
    std::size_t size() const noexcept { return fillers.size() + 1; }

    bool operator==(const TestCase&) const = default;
};

struct TestSuite {
    std::string policy_id;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    std::size_t scene_count = 0;
    std::vector<std::string> warnings;
    std::vector<TestCase> cases;

    const TestCase* find(std::string_view case_id) const noexcept;

    bool operator==(const TestSuite&) const = default;
};

/// Classifies a factor by whether it is in the trigger and whether its
/// coefficient exceeds the threshold. Empty for the action factor or a
/// factor missing from the report.
std::optional<Condition> assess_factor(std::string_view factor,
                                       const AssociationReport& report,
                                       const ValidatedPolicy& policy,
                                       double threshold);

/// Builds the case for one assessed factor, or nothing when the
/// concurrency counts offer no informative instance. Condition 4 always
/// yields nothing. Ties resolve to the earliest instance in environment order.
std::optional<TestCase> compose_case(const Environment& env,
                                     const ValidatedPolicy& policy,
                                     const AssociationReport& report,
                                     std::string_view factor,
                                     Condition condition,
                                     const GenerationConfig& config);

/// Walks every factor in environment order (skipping the action factor)
/// and collects the cases. Throws StaleReport if the report was built for
/// another action; a history below the minimum size produces a warning.
TestSuite generate_suite(const Environment& env,
                         const ValidatedPolicy& policy,
                         const AssociationReport& report,
                         const GenerationConfig& config);

struct EnactmentResult {
    std::string case_id;
    std::string policy_id;
    bool triggered = false;
    TriggerMatch match;
    /// Simulated scene: case instances plus defaults (first instance for
    /// factors without one).
    ContextScene scene;
};

/// Runs the policy on the case's scene. Throws PolicyMismatch when the
/// case was generated for another policy.
EnactmentResult enact(const Environment& env, const ValidatedPolicy& policy, const TestCase& test_case);

enum class Decision { AddSuggested, RemoveFocusFactor, WidenSelected, Dismiss };

std::string_view to_string(Decision decision) noexcept;
std::optional<Decision> parse_decision(std::string_view text) noexcept;

/// Edits the policy as the user would after viewing a case, then
/// revalidates it.
///  - AddSuggested: adds the focus factor with the suggestion, or unions
///    the suggestion into the factor's existing selection.
///  - WidenSelected: unions into an existing selection; InvalidDecision if
///    the focus factor is not in the trigger.
///  - RemoveFocusFactor: drops the focus factor from the trigger.
///  - Dismiss: identity.
ValidatedPolicy apply_refinement(const Environment& env,
                                 const ValidatedPolicy& policy,
                                 const TestCase& test_case,
                                 Decision decision);

} // namespace capforge
