#include "capforge/testgen.hpp"

#include "capforge/error.hpp"
#include "capforge/history.hpp"
#include "capforge/random.hpp"

#include <algorithm>

namespace capforge {

namespace {

bool in_trigger(const ValidatedPolicy& policy, std::string_view factor)
{
    const auto& trigger = policy.policy().trigger;
    return std::any_of(trigger.begin(), trigger.end(), [&](const auto& entry) { return entry.first == factor; });
}

std::string action_label(const InstanceRef& action)
{
    return action.factor + " " + action.instance;
}

std::string rationale(Condition condition, const InstanceRef& action, const InstanceRef& suggested)
{
    const auto& f = suggested.factor;
    const auto& v = suggested.instance;
    switch (condition) {
    case Condition::CorrelatedMissing:
        return action_label(action) + " usually happens while " + f + " is " + v + ", but the trigger does not mention "
            + f + ".";
    case Condition::UncorrelatedIncluded:
        return action_label(action) + " barely depends on " + f + "; it also happened when " + f + " was " + v
            + ", which the trigger leaves out.";
    case Condition::CorrelatedIncluded:
        return action_label(action) + " happens more often with " + f + " = " + v
            + " than with any instance the trigger selects.";
    case Condition::UncorrelatedMissing:
        break;
    }
    return {};
}

using Concurrency = std::vector<std::pair<std::string, std::size_t>>;

std::optional<std::size_t> argmax(const Concurrency& counts)
{
    std::optional<std::size_t> best;
    for (std::size_t v = 0; v < counts.size(); ++v)
        if (!best || counts[v].second > counts[*best].second)
            best = v;
    return best;
}

} // namespace

const TestCase* TestSuite::find(std::string_view case_id) const noexcept
{
    for (const auto& c : cases)
        if (c.id == case_id)
            return &c;
    return nullptr;
}

std::optional<Condition> assess_factor(std::string_view factor,
                                       const AssociationReport& report,
                                       const ValidatedPolicy& policy,
                                       double threshold)
{
    if (factor == policy.policy().action.factor)
        return std::nullopt;
    const auto* entry = report.find(factor);
    if (entry == nullptr)
        return std::nullopt;

    const bool high = entry->u > threshold;
    const bool included = in_trigger(policy, factor);
    if (high)
        return included ? Condition::CorrelatedIncluded : Condition::CorrelatedMissing;
    return included ? Condition::UncorrelatedIncluded : Condition::UncorrelatedMissing;
}

std::optional<TestCase> compose_case(const Environment& env,
                                     const ValidatedPolicy& policy,
                                     const AssociationReport& report,
                                     std::string_view factor,
                                     Condition condition,
                                     const GenerationConfig& config)
{
    if (condition == Condition::UncorrelatedMissing)
        return std::nullopt;
    const auto* entry = report.find(factor);
    if (entry == nullptr)
        return std::nullopt;
    const auto f = env.factor_index(factor);
    const TriggerClause* clause = policy.clause_for(f);
    const auto& counts = entry->concurrency;
    auto selected = [&](std::size_t v) { return clause != nullptr && clause->contains(v); };

    std::optional<std::size_t> pick;
    switch (condition) {
    case Condition::CorrelatedMissing: {
        // Most frequent companion of the action.
        pick = argmax(counts);
        if (pick && counts[*pick].second == 0)
            pick.reset();
        break;
    }
    case Condition::UncorrelatedIncluded: {
        // Rarest (but observed) companion the trigger does not already select.
        for (std::size_t v = 0; v < counts.size(); ++v) {
            if (selected(v) || counts[v].second == 0)
                continue;
            if (!pick || counts[v].second < counts[*pick].second)
                pick = v;
        }
        break;
    }
    case Condition::CorrelatedIncluded: {
        // An unselected instance strictly more frequent than every selected one.
        const auto best = argmax(counts);
        std::size_t best_selected = 0;
        for (std::size_t v = 0; v < counts.size(); ++v)
            if (selected(v))
                best_selected = std::max(best_selected, counts[v].second);
        if (best && !selected(*best) && counts[*best].second > best_selected)
            pick = best;
        break;
    }
    case Condition::UncorrelatedMissing:
        break;
    }
    if (!pick)
        return std::nullopt;

    TestCase out;
    out.id = "c" + std::to_string(static_cast<int>(condition)) + "-" + std::string(factor);
    out.policy_id = policy.id();
    out.focus_factor = std::string(factor);
    out.condition = condition;
    out.suggested = {std::string(factor), counts[*pick].first};

    Rng rng(mix_seed(config.seed, f));
    for (const auto& other : policy.trigger()) {
        if (other.factor == f)
            continue;
        const auto v = other.instances[rng.below(other.instances.size())];
        out.fillers.emplace_back(env.factor(other.factor).id, env.instance_name(other.factor, v));
    }
    out.rationale = rationale(condition, policy.policy().action, out.suggested);
    return out;
}

TestSuite generate_suite(const Environment& env,
                         const ValidatedPolicy& policy,
                         const AssociationReport& report,
                         const GenerationConfig& config)
{
    if (report.action != policy.policy().action)
        throw Error(ErrorCode::StaleReport, policy.id(), "report was built for another action");
    if (policy.environment() != env.fingerprint())
        throw Error(ErrorCode::EnvironmentMismatch, policy.id());
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "threshold", "must lie in [0, 1]");

    TestSuite suite;
    suite.policy_id = policy.id();
    suite.threshold = config.threshold;
    suite.seed = config.seed;
    suite.scene_count = report.scene_count;
    const std::size_t required = 10 * env.size();
    if (report.scene_count < required)
        suite.warnings.push_back("history has " + std::to_string(report.scene_count) + " scenes; at least "
                                 + std::to_string(required) + " are recommended");

    for (std::size_t f = 0; f < env.size(); ++f) {
        if (f == policy.action_factor())
            continue;
        const auto& id = env.factor(f).id;
        const auto condition = assess_factor(id, report, policy, config.threshold);
        if (!condition)
            continue;
        if (auto test_case = compose_case(env, policy, report, id, *condition, config))
            suite.cases.push_back(std::move(*test_case));
    }
    return suite;
}

EnactmentResult enact(const Environment& env, const ValidatedPolicy& policy, const TestCase& test_case)
{
    if (test_case.policy_id != policy.id())
        throw Error(ErrorCode::PolicyMismatch, test_case.policy_id, "case belongs to another policy");
    if (policy.environment() != env.fingerprint())
        throw Error(ErrorCode::EnvironmentMismatch, policy.id());

    ContextScene scene;
    scene.assignments.resize(env.size());
    for (std::size_t f = 0; f < env.size(); ++f)
        scene.assignments[f] = env.default_index(f).value_or(0);
    auto assign = [&](const std::string& factor, const std::string& instance) {
        const auto f = env.factor_index(factor);
        scene.assignments[f] = env.instance_index(f, instance);
    };
    assign(test_case.suggested.factor, test_case.suggested.instance);
    for (const auto& [factor, instance] : test_case.fillers)
        assign(factor, instance);

    EnactmentResult result;
    result.case_id = test_case.id;
    result.policy_id = policy.id();
    result.match = trigger_satisfied(policy, scene);
    result.triggered = result.match.satisfied;
    result.scene = std::move(scene);
    return result;
}

std::string_view to_string(Decision decision) noexcept
{
    switch (decision) {
    case Decision::AddSuggested: return "add_suggested";
    case Decision::RemoveFocusFactor: return "remove_focus_factor";
    case Decision::WidenSelected: return "widen_selected";
    case Decision::Dismiss: return "dismiss";
    }
    return "?";
}

std::optional<Decision> parse_decision(std::string_view text) noexcept
{
    for (auto d : {Decision::AddSuggested, Decision::RemoveFocusFactor, Decision::WidenSelected, Decision::Dismiss})
        if (to_string(d) == text)
            return d;
    return std::nullopt;
}

ValidatedPolicy apply_refinement(const Environment& env,
                                 const ValidatedPolicy& policy,
                                 const TestCase& test_case,
                                 Decision decision)
{
    if (test_case.policy_id != policy.id())
        throw Error(ErrorCode::PolicyMismatch, test_case.policy_id, "case belongs to another policy");
    if (decision == Decision::Dismiss)
        return policy;

    Policy edited = policy.policy();
    auto& trigger = edited.trigger;
    auto existing = std::find_if(trigger.begin(), trigger.end(),
                                 [&](const auto& entry) { return entry.first == test_case.focus_factor; });

    switch (decision) {
    case Decision::AddSuggested:
    case Decision::WidenSelected:
        if (existing != trigger.end()) {
            existing->second.push_back(test_case.suggested.instance);
        } else if (decision == Decision::AddSuggested) {
            trigger.emplace_back(test_case.focus_factor, std::vector<std::string>{test_case.suggested.instance});
        } else {
            throw Error(ErrorCode::InvalidDecision, test_case.focus_factor, "factor is not in the trigger");
        }
        break;
    case Decision::RemoveFocusFactor:
        if (existing != trigger.end())
            trigger.erase(existing);
        break;
    case Decision::Dismiss:
        break;
    }
    return validate_policy(edited, env);
}

} // namespace capforge
