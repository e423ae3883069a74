#include "capforge/policy_engine.hpp"

#include "capforge/error.hpp"

namespace capforge {

namespace {

void require_width(const ValidatedPolicy& policy, const ContextScene& scene)
{
    if (scene.assignments.size() != policy.factor_count())
        throw Error(ErrorCode::EnvironmentMismatch, policy.id(), "scene width differs from the policy's environment");
}

double ratio(std::size_t num, std::size_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

TriggerMatch trigger_satisfied(const ValidatedPolicy& policy, const ContextScene& scene)
{
    require_width(policy, scene);
    TriggerMatch match;
    match.satisfied = true;
    match.detail.reserve(policy.trigger().size());
    for (const auto& clause : policy.trigger()) {
        const auto observed = scene.assignments[clause.factor];
        const bool ok = clause.contains(observed);
        match.detail.push_back({clause.factor, observed, ok});
        match.satisfied = match.satisfied && ok;
    }
    return match;
}

std::string_view to_string(Outcome outcome) noexcept
{
    switch (outcome) {
    case Outcome::TruePositive: return "TP";
    case Outcome::FalsePositive: return "FP";
    case Outcome::FalseNegative: return "FN";
    case Outcome::TrueNegative: return "TN";
    }
    return "?";
}

Outcome classify_scene(const ValidatedPolicy& policy, const ContextScene& scene)
{
    const bool predicted = trigger_satisfied(policy, scene).satisfied;
    const bool expected = scene.assignments[policy.action_factor()] == policy.action_instance();
    if (predicted)
        return expected ? Outcome::TruePositive : Outcome::FalsePositive;
    return expected ? Outcome::FalseNegative : Outcome::TrueNegative;
}

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn)
{
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f_score = ratio(2 * tp, 2 * tp + fp + fn);
    return m;
}

MetricsReport evaluate(const ValidatedPolicy& policy, const ContextHistory& history, const Environment& env)
{
    if (history.empty())
        throw Error(ErrorCode::HistoryEmpty, "");
    if (policy.environment() != env.fingerprint() || history.env_ref() != env.ref())
        throw Error(ErrorCode::EnvironmentMismatch, policy.id());

    std::size_t counts[4] = {0, 0, 0, 0};
    for (const auto& scene : history.scenes())
        ++counts[static_cast<int>(classify_scene(policy, scene))];
    return metrics_from_counts(counts[0], counts[1], counts[2], counts[3]);
}

} // namespace capforge
