#pragma once

#include "capforge/context_model.hpp"
#include "capforge/history.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace capforge {

// Information measures over nominal series, in bits. Labels are opaque;
// only equality matters. Each throws EmptySequence on empty input and
// LengthMismatch when paired series differ in length.

double entropy(std::span<const std::size_t> labels);
double entropy(std::span<const std::string> labels);

/// H(X | Y) = sum_y p(y) H(X | Y = y).
double conditional_entropy(std::span<const std::size_t> x, std::span<const std::size_t> y);
double conditional_entropy(std::span<const std::string> x, std::span<const std::string> y);

/// Theil's U(X | Y) = (H(X) - H(X | Y)) / H(X): the fraction of the
/// uncertainty about X removed by knowing Y. Asymmetric, in [0, 1];
/// 1 when X is constant.
double uncertainty_coefficient(std::span<const std::size_t> x, std::span<const std::size_t> y);
double uncertainty_coefficient(std::span<const std::string> x, std::span<const std::string> y);

struct FactorAssociation {
    std::string factor;
    /// U(action present | factor instance).
    double u = 0.0;
    /// Co-occurrence count with the action, per instance in environment order.
    std::vector<std::pair<std::string, std::size_t>> concurrency;

    bool operator==(const FactorAssociation&) const = default;
};

/// How each factor relates to one action instance over a history. The
/// action's own factor is excluded.
struct AssociationReport {
    InstanceRef action;
    std::size_t scene_count = 0;
    std::size_t action_support = 0;
    std::vector<FactorAssociation> factors;

    const FactorAssociation* find(std::string_view factor) const noexcept;

    bool operator==(const AssociationReport&) const = default;
};

/// Throws HistoryEmpty, ActionNotControllable, EnvironmentMismatch, or
/// ActionNeverVaries when the action is present in all scenes or in none.
AssociationReport build_report(const ContextHistory& history, const Environment& env, const InstanceRef& action);

} // namespace capforge
