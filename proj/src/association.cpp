#include "capforge/association.hpp"

#include "capforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace capforge {

namespace {

/// Maps arbitrary labels to dense codes 0..k-1 in order of first appearance.
template <class T>
std::vector<std::size_t> densify(std::span<const T> labels, std::size_t* distinct = nullptr)
{
    std::unordered_map<T, std::size_t> codes;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& label : labels) {
        auto [it, inserted] = codes.try_emplace(label, codes.size());
        out.push_back(it->second);
    }
    if (distinct != nullptr)
        *distinct = codes.size();
    return out;
}

double entropy_of_counts(std::span<const std::size_t> counts, std::size_t total)
{
    double h = 0.0;
    const double n = static_cast<double>(total);
    for (auto c : counts) {
        if (c == 0)
            continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

void require_pair(std::size_t x, std::size_t y)
{
    if (x == 0 || y == 0)
        throw Error(ErrorCode::EmptySequence, "");
    if (x != y)
        throw Error(ErrorCode::LengthMismatch, std::to_string(x) + "!=" + std::to_string(y));
}

std::vector<std::string_view> views(std::span<const std::string> labels)
{
    return {labels.begin(), labels.end()};
}

double entropy_dense(std::span<const std::size_t> codes, std::size_t distinct)
{
    std::vector<std::size_t> counts(distinct, 0);
    for (auto c : codes)
        ++counts[c];
    return entropy_of_counts(counts, codes.size());
}

double conditional_dense(std::span<const std::size_t> x, std::size_t kx, std::span<const std::size_t> y, std::size_t ky)
{
    // Row y of the contingency table holds the X distribution within class y.
    std::vector<std::size_t> table(kx * ky, 0);
    std::vector<std::size_t> row_total(ky, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++table[y[i] * kx + x[i]];
        ++row_total[y[i]];
    }
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (std::size_t r = 0; r < ky; ++r) {
        if (row_total[r] == 0)
            continue;
        const std::span<const std::size_t> row(table.data() + r * kx, kx);
        h += static_cast<double>(row_total[r]) / n * entropy_of_counts(row, row_total[r]);
    }
    return h;
}

double theil_u_dense(std::span<const std::size_t> x, std::size_t kx, std::span<const std::size_t> y, std::size_t ky)
{
    const double hx = entropy_dense(x, kx);
    if (hx == 0.0)
        return 1.0;
    const double u = (hx - conditional_dense(x, kx, y, ky)) / hx;
    return std::clamp(u, 0.0, 1.0);
}

} // namespace

double entropy(std::span<const std::size_t> labels)
{
    if (labels.empty())
        throw Error(ErrorCode::EmptySequence, "");
    std::size_t k = 0;
    const auto codes = densify(labels, &k);
    return entropy_dense(codes, k);
}

double entropy(std::span<const std::string> labels)
{
    if (labels.empty())
        throw Error(ErrorCode::EmptySequence, "");
    const auto v = views(labels);
    std::size_t k = 0;
    const auto codes = densify(std::span<const std::string_view>(v), &k);
    return entropy_dense(codes, k);
}

double conditional_entropy(std::span<const std::size_t> x, std::span<const std::size_t> y)
{
    require_pair(x.size(), y.size());
    std::size_t kx = 0;
    std::size_t ky = 0;
    const auto cx = densify(x, &kx);
    const auto cy = densify(y, &ky);
    return conditional_dense(cx, kx, cy, ky);
}

double conditional_entropy(std::span<const std::string> x, std::span<const std::string> y)
{
    require_pair(x.size(), y.size());
    const auto vx = views(x);
    const auto vy = views(y);
    std::size_t kx = 0;
    std::size_t ky = 0;
    const auto cx = densify(std::span<const std::string_view>(vx), &kx);
    const auto cy = densify(std::span<const std::string_view>(vy), &ky);
    return conditional_dense(cx, kx, cy, ky);
}

double uncertainty_coefficient(std::span<const std::size_t> x, std::span<const std::size_t> y)
{
    require_pair(x.size(), y.size());
    std::size_t kx = 0;
    std::size_t ky = 0;
    const auto cx = densify(x, &kx);
    const auto cy = densify(y, &ky);
    return theil_u_dense(cx, kx, cy, ky);
}

double uncertainty_coefficient(std::span<const std::string> x, std::span<const std::string> y)
{
    require_pair(x.size(), y.size());
    const auto vx = views(x);
    const auto vy = views(y);
    std::size_t kx = 0;
    std::size_t ky = 0;
    const auto cx = densify(std::span<const std::string_view>(vx), &kx);
    const auto cy = densify(std::span<const std::string_view>(vy), &ky);
    return theil_u_dense(cx, kx, cy, ky);
}

const FactorAssociation* AssociationReport::find(std::string_view factor) const noexcept
{
    for (const auto& entry : factors)
        if (entry.factor == factor)
            return &entry;
    return nullptr;
}

AssociationReport build_report(const ContextHistory& history, const Environment& env, const InstanceRef& action)
{
    if (history.empty())
        throw Error(ErrorCode::HistoryEmpty, "");
    if (history.env_ref() != env.ref())
        throw Error(ErrorCode::EnvironmentMismatch, history.env_ref());
    const auto action_factor = env.factor_index(action.factor);
    const auto action_instance = env.instance_index(action_factor, action.instance);
    if (!env.factor(action_factor).controllable)
        throw Error(ErrorCode::ActionNotControllable, action.factor);

    const auto scenes = history.scenes();
    const std::size_t n = scenes.size();

    // Binary action series: 1 where the action instance is present.
    std::vector<std::size_t> present(n);
    std::size_t support = 0;
    for (std::size_t i = 0; i < n; ++i) {
        present[i] = scenes[i].assignments.at(action_factor) == action_instance ? 1 : 0;
        support += present[i];
    }
    if (support == 0 || support == n)
        throw Error(ErrorCode::ActionNeverVaries, action.factor + "=" + action.instance);

    AssociationReport report;
    report.action = action;
    report.scene_count = n;
    report.action_support = support;

    std::vector<std::size_t> column(n);
    for (std::size_t f = 0; f < env.size(); ++f) {
        if (f == action_factor)
            continue;
        const auto& factor = env.factor(f);
        std::vector<std::size_t> counts(factor.instances.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = scenes[i].assignments[f];
            if (present[i] != 0)
                ++counts[column[i]];
        }

        FactorAssociation entry;
        entry.factor = factor.id;
        entry.u = theil_u_dense(present, 2, column, factor.instances.size());
        entry.concurrency.reserve(counts.size());
        for (std::size_t v = 0; v < counts.size(); ++v)
            entry.concurrency.emplace_back(factor.instances[v], counts[v]);
        report.factors.push_back(std::move(entry));
    }
    return report;
}

} // namespace capforge
