#pragma once

#include "capforge/context_model.hpp"
#include "capforge/history.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace capforge {

struct FactorMatch {
    std::size_t factor = 0;
    std::size_t observed = 0;
    bool matched = false;

    bool operator==(const FactorMatch&) const = default;
};

struct TriggerMatch {
    bool satisfied = false;
    /// One entry per trigger factor, in trigger order.
    std::vector<FactorMatch> detail;
};

/// True iff, for every trigger factor, the scene's instance is one of the
/// selected instances. Throws EnvironmentMismatch for a scene of another width.
TriggerMatch trigger_satisfied(const ValidatedPolicy& policy, const ContextScene& scene);

enum class Outcome { TruePositive, FalsePositive, FalseNegative, TrueNegative };

std::string_view to_string(Outcome outcome) noexcept;

/// Ground truth is whether the scene itself holds the action instance.
Outcome classify_scene(const ValidatedPolicy& policy, const ContextScene& scene);

struct MetricsReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const MetricsReport&) const = default;
};

/// Fills precision, recall and F from the counts; a zero denominator
/// yields 0. F is computed as 2tp / (2tp + fp + fn), which equals the
/// harmonic mean of precision and recall without the extra rounding.
MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Throws HistoryEmpty or EnvironmentMismatch.
MetricsReport evaluate(const ValidatedPolicy& policy, const ContextHistory& history, const Environment& env);

} // namespace capforge
