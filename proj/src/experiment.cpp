#include "capforge/experiment.hpp"

#include "capforge/error.hpp"
#include "capforge/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace capforge {

namespace {

const std::vector<std::string>* hidden_selection(const Policy& hidden, const std::string& factor)
{
    for (const auto& [f, selected] : hidden.trigger)
        if (f == factor)
            return &selected;
    return nullptr;
}

bool contains(const std::vector<std::string>& items, const std::string& value)
{
    return std::find(items.begin(), items.end(), value) != items.end();
}

// Seed streams for one experiment.
enum Stream : std::uint64_t { kRoutine = 0, kSplit = 1, kSuite = 2 };

} // namespace

std::string_view to_string(RefinementMode mode) noexcept
{
    switch (mode) {
    case RefinementMode::AcceptAll: return "accept-all-suggestions";
    case RefinementMode::AcceptIfConsistent: return "accept-if-consistent-with-hidden-rule";
    case RefinementMode::RejectAll: return "reject-all";
    }
    return "?";
}

std::optional<RefinementMode> parse_refinement_mode(std::string_view text) noexcept
{
    if (text == "accept-all" || text == "accept-all-suggestions")
        return RefinementMode::AcceptAll;
    if (text == "accept-if-consistent" || text == "accept-if-consistent-with-hidden-rule")
        return RefinementMode::AcceptIfConsistent;
    if (text == "reject-all" || text == "baseline")
        return RefinementMode::RejectAll;
    return std::nullopt;
}

std::string_view to_string(Termination termination) noexcept
{
    switch (termination) {
    case Termination::SuiteEmpty: return "suite-empty";
    case Termination::Stable: return "stable";
    case Termination::CaseCap: return "case-cap";
    }
    return "?";
}

Decision ScriptedUser::decide(const TestCase& test_case) const
{
    switch (mode) {
    case RefinementMode::RejectAll:
        return Decision::Dismiss;
    case RefinementMode::AcceptAll:
        return Decision::AddSuggested;
    case RefinementMode::AcceptIfConsistent:
        break;
    }

    const auto* wanted = hidden_selection(hidden_rule, test_case.focus_factor);
    if (test_case.condition == Condition::CorrelatedMissing)
        return wanted != nullptr && contains(*wanted, test_case.suggested.instance) ? Decision::AddSuggested
                                                                                    : Decision::Dismiss;
    // The factor is already constrained: drop it if the user never cared
    // about it, widen if the suggestion is something they want.
    if (wanted == nullptr)
        return Decision::RemoveFocusFactor;
    return contains(*wanted, test_case.suggested.instance) ? Decision::AddSuggested : Decision::Dismiss;
}

ExperimentReport run_refinement_experiment(const Environment& env,
                                           const RoutineSpec& routine,
                                           const Policy& hidden_rule,
                                           const Policy& initial_policy,
                                           RefinementMode mode,
                                           std::uint64_t seed,
                                           const ExperimentOptions& options)
{
    validate_policy(hidden_rule, env);
    auto policy = validate_policy(initial_policy, env);
    if (hidden_rule.action != initial_policy.action)
        throw Error(ErrorCode::PolicyMismatch, initial_policy.id, "hidden rule and initial policy target different actions");

    RoutineSpec spec = routine;
    spec.seed = mix_seed(seed, kRoutine);
    if (options.noise)
        spec.noise = *options.noise;
    const auto history = synthesize_history(spec, env);
    if (const auto verdict = check_minimum_size(history, env); !verdict.ok)
        throw Error(ErrorCode::HistoryTooSmall, std::to_string(verdict.actual),
                    "routine produced fewer than " + std::to_string(verdict.required) + " scenes");

    const auto split = split_history(history, options.train_fraction, mix_seed(seed, kSplit), &env, policy.policy().action);
    const auto report = build_report(split.train, env, policy.policy().action);
    const GenerationConfig config{options.threshold, mix_seed(seed, kSuite)};
    const ScriptedUser user{hidden_rule, mode};

    ExperimentReport out;
    out.seed = seed;
    out.noise = spec.noise;
    out.train_scenes = split.train.size();
    out.eval_scenes = split.eval.size();
    out.initial_policy = policy.policy();
    out.initial = evaluate(policy, split.eval, env);

    for (;;) {
        const auto suite = generate_suite(env, policy, report, config);
        ++out.regenerations;
        if (suite.cases.empty()) {
            out.termination = Termination::SuiteEmpty;
            break;
        }
        bool changed = false;
        for (const auto& test_case : suite.cases) {
            if (out.cases_viewed >= options.case_cap)
                break;
            ++out.cases_viewed;
            const auto decision = user.decide(test_case);
            bool step_changed = false;
            try {
                auto next = apply_refinement(env, policy, test_case, decision);
                step_changed = !(next == policy);
                policy = std::move(next);
            } catch (const Error& e) {
                // e.g. removing the last trigger factor; the user keeps the policy.
                if (e.code() != ErrorCode::EmptyTrigger)
                    throw;
            }
            changed = changed || step_changed;
            out.steps.push_back({out.regenerations, test_case, decision, step_changed});
        }
        if (!changed) {
            out.termination = Termination::Stable;
            break;
        }
        if (out.cases_viewed >= options.case_cap) {
            out.termination = Termination::CaseCap;
            out.non_terminated = true;
            break;
        }
    }

    out.final_policy = policy.policy();
    out.final = evaluate(policy, split.eval, env);
    return out;
}

CalibrationWorld make_calibration_world(std::size_t factors, std::size_t scenes, double noise, std::uint64_t seed)
{
    if (factors < 4)
        throw Error(ErrorCode::InvalidArgument, "factors", "need a device, a time factor and two rule factors");
    if (scenes < 2)
        throw Error(ErrorCode::InvalidArgument, "scenes", "need at least two scenes");
    if (!(noise >= 0.0 && noise <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "noise", "must lie in [0, 1]");

    constexpr std::array kinds{FactorKind::Location, FactorKind::Activity, FactorKind::UserState,
                               FactorKind::ObjectState, FactorKind::DigitalState};
    Rng rng(seed);

    EnvironmentConfig config;
    config.name = "calibration-" + std::to_string(factors) + "x" + std::to_string(scenes);
    config.factors.push_back({"device", FactorKind::ObjectState, {"off", "on"}, "off", true, std::nullopt});
    config.factors.push_back({"time", FactorKind::Time, default_time_instances(), "morning", false, std::nullopt});
    for (std::size_t f = 2; f < factors; ++f) {
        ContextFactor factor;
        factor.id = "f" + std::to_string(f);
        factor.kind = kinds[(f - 2) % kinds.size()];
        const std::size_t count = 2 + rng.below(4);
        for (std::size_t i = 0; i < count; ++i)
            factor.instances.push_back(factor.id + "_" + std::to_string(i));
        factor.default_instance = factor.instances.front();
        config.factors.push_back(std::move(factor));
    }

    CalibrationWorld world{validate_environment(std::move(config)), {}, {"device", "on"}, {"f2", "f3"}};
    const auto& env = world.env;
    world.history = ContextHistory(env.ref());

    // Exactly round(0.3 n) routine scenes, at least one of each kind.
    const auto active_count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(scenes))), 1, scenes - 1);
    std::vector<std::size_t> order(scenes);
    for (std::size_t i = 0; i < scenes; ++i)
        order[i] = i;
    for (std::size_t i = scenes; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<bool> active(scenes, false);
    for (std::size_t k = 0; k < active_count; ++k)
        active[order[k]] = true;

    for (std::size_t s = 0; s < scenes; ++s) {
        ContextScene scene;
        scene.seq = static_cast<std::int64_t>(s);
        scene.assignments.resize(env.size());
        scene.assignments[0] = active[s] ? 1 : 0;
        for (std::size_t f = 1; f < env.size(); ++f) {
            const auto width = env.factor(f).instances.size();
            if (f == 2 || f == 3)
                scene.assignments[f] = active[s] ? 0 : 1 + rng.below(width - 1);
            else
                scene.assignments[f] = rng.below(width);
        }
        for (std::size_t f = 0; f < env.size(); ++f)
            if (rng.chance(noise))
                scene.assignments[f] = rng.below(env.factor(f).instances.size());
        world.history.push(std::move(scene));
    }
    return world;
}

std::vector<std::pair<std::size_t, std::size_t>> sweep_grid()
{
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t factors : {5, 10, 15, 20})
        for (std::size_t scenes : {10, 20, 30, 40, 50})
            cells.emplace_back(factors, scenes);
    return cells;
}

std::vector<std::pair<std::size_t, std::size_t>> minimum_history_grid()
{
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t factors : {5, 10, 15, 20})
        cells.emplace_back(factors, 10 * factors);
    return cells;
}

CalibrationTable run_calibration(const CalibrationOptions& options)
{
    CalibrationTable table;
    table.threshold = options.threshold;
    table.noise = options.noise;
    table.seed = options.seed;

    for (std::size_t c = 0; c < options.cells.size(); ++c) {
        const auto [factors, scenes] = options.cells[c];
        CalibrationCell cell;
        cell.factors = factors;
        cell.scenes = scenes;

        const auto world = make_calibration_world(factors, scenes, options.noise, mix_seed(options.seed, c));
        try {
            const auto report = build_report(world.history, world.env, world.action);
            for (const auto& entry : report.factors) {
                if (entry.u > options.threshold)
                    ++cell.supra_threshold;
                if (std::find(world.rule_factors.begin(), world.rule_factors.end(), entry.factor)
                    != world.rule_factors.end())
                    cell.rule_u.push_back(entry.u);
                else
                    cell.max_other_u = std::max(cell.max_other_u, entry.u);
            }
        } catch (const Error& e) {
            // Noise can flatten the device series in tiny cells.
            if (e.code() != ErrorCode::ActionNeverVaries)
                throw;
            cell.degenerate = true;
        }
        table.cells.push_back(std::move(cell));
    }
    return table;
}

} // namespace capforge
