#pragma once

#include "capforge/association.hpp"
#include "capforge/context_model.hpp"
#include "capforge/history.hpp"
#include "capforge/policy_engine.hpp"
#include "capforge/testgen.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace capforge {

enum class RefinementMode { AcceptAll, AcceptIfConsistent, RejectAll };

std::string_view to_string(RefinementMode mode) noexcept;
std::optional<RefinementMode> parse_refinement_mode(std::string_view text) noexcept;

/// Stand-in for a study participant. `hidden_rule` is what the user really
/// wants; the mode decides how suggestions are judged against it.
struct ScriptedUser {
    Policy hidden_rule;
    RefinementMode mode = RefinementMode::AcceptIfConsistent;

    Decision decide(const TestCase& test_case) const;
};

struct ExperimentOptions {
    double threshold = 0.5;
    double train_fraction = 0.75;
    std::size_t case_cap = 20;
    /// Replaces the routine's noise when set.
    std::optional<double> noise;
};

enum class Termination { SuiteEmpty, Stable, CaseCap };

std::string_view to_string(Termination termination) noexcept;

struct RefinementStep {
    std::size_t iteration = 0;
    TestCase test_case;
    Decision decision = Decision::Dismiss;
    bool changed = false;
};

struct ExperimentReport {
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::size_t train_scenes = 0;
    std::size_t eval_scenes = 0;
    Policy initial_policy;
    Policy final_policy;
    MetricsReport initial;
    MetricsReport final;
    std::size_t regenerations = 0;
    std::size_t cases_viewed = 0;
    Termination termination = Termination::SuiteEmpty;
    /// Cap reached while refinements were still changing the policy.
    bool non_terminated = false;
    std::vector<RefinementStep> steps;
};

/// Synthesizes a history from the routine, splits it, then loops: generate
/// a suite on the train part, let the scripted user judge each case,
/// regenerate. Stops when the suite is empty, a pass changes nothing, or
/// `case_cap` cases have been viewed. Metrics are taken on the eval part
/// before and after. Deterministic given `seed`, which replaces the
/// routine's own seed.
///
/// Throws HistoryTooSmall when the routine yields fewer than ten scenes per
/// factor, plus any validation error of the inputs.
ExperimentReport run_refinement_experiment(const Environment& env,
                                           const RoutineSpec& routine,
                                           const Policy& hidden_rule,
                                           const Policy& initial_policy,
                                           RefinementMode mode,
                                           std::uint64_t seed,
                                           const ExperimentOptions& options = {});

// Calibration sweep

/// Synthetic world used by the calibration sweep: one controllable device,
/// a time factor and random nominal factors. The device is on exactly in
/// the "routine" scenes, where both rule factors hold their first instance;
/// elsewhere both hold another instance. Slots are then perturbed with
/// probability `noise`.
struct CalibrationWorld {
    Environment env;
    ContextHistory history;
    InstanceRef action;
    std::vector<std::string> rule_factors;
};

/// `factors` counts every factor including the device; at least 4.
CalibrationWorld make_calibration_world(std::size_t factors, std::size_t scenes, double noise, std::uint64_t seed);

struct CalibrationCell {
    std::size_t factors = 0;
    std::size_t scenes = 0;
    std::size_t supra_threshold = 0;
    std::vector<double> rule_u;
    double max_other_u = 0.0;
    bool degenerate = false;
};

struct CalibrationOptions {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    double threshold = 0.5;
    double noise = 0.05;
    std::uint64_t seed = 0;
};

/// {5,10,15,20} factors x {10,20,...,50} scenes.
std::vector<std::pair<std::size_t, std::size_t>> sweep_grid();
/// {5,10,15,20} factors x exactly the minimum history (10 per factor).
std::vector<std::pair<std::size_t, std::size_t>> minimum_history_grid();

struct CalibrationTable {
    double threshold = 0.5;
    double noise = 0.05;
    std::uint64_t seed = 0;
    std::vector<CalibrationCell> cells;
};

CalibrationTable run_calibration(const CalibrationOptions& options);

} // namespace capforge
