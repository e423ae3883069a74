#pragma once

#include "capforge/context_model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace capforge {

/// Append-only, seq-ordered log of context scenes recorded in one
/// environment. Scenes already pushed are never modified.
class ContextHistory {
public:
    ContextHistory() = default;
    explicit ContextHistory(std::string env_ref) : env_ref_(std::move(env_ref)) {}

    const std::string& env_ref() const noexcept { return env_ref_; }
    std::span<const ContextScene> scenes() const noexcept { return scenes_; }
    std::size_t size() const noexcept { return scenes_.size(); }
    bool empty() const noexcept { return scenes_.empty(); }
    const ContextScene& operator[](std::size_t i) const { return scenes_.at(i); }
    const ContextScene& back() const { return scenes_.back(); }

    std::int64_t next_seq() const noexcept { return scenes_.empty() ? 0 : scenes_.back().seq + 1; }

    /// Day stamped on scenes appended through append_scene, if any.
    std::optional<int> open_day() const noexcept { return open_day_; }
    /// Opens the next day (0 for the first).
    int begin_day();

    /// Throws NonMonotonicSeq unless scene.seq exceeds the last seq.
    void push(ContextScene scene);

private:
    std::string env_ref_;
    std::vector<ContextScene> scenes_;
    std::optional<int> open_day_;
};

/// Normalizes `partial` and appends it with the next seq and the open day.
/// A scene identical to the previous one on the same day is not registered;
/// returns whether the history grew.
bool append_scene(ContextHistory& history, const Environment& env, const PartialAssignment& partial);

struct HistorySplit {
    ContextHistory train;
    ContextHistory eval;
};

/// Partitions a history into train/eval parts.
///
/// When every scene carries a day, the split is a chronological prefix of
/// whole days whose scene count is closest to train_fraction of the total
/// (at least one day on each side). Otherwise floor(fraction * n) scenes,
/// clamped to [1, n-1], are sampled at random; with `stratify_on` the sample
/// is stratified on presence of that instance using largest-remainder
/// allocation. Both parts keep the original order.
///
/// Throws InvalidArgument for a fraction outside (0, 1) and HistoryTooSmall
/// when either side would be empty.
HistorySplit split_history(const ContextHistory& history,
                           double train_fraction,
                           std::uint64_t seed,
                           const Environment* env = nullptr,
                           const std::optional<InstanceRef>& stratify_on = std::nullopt);

struct WeightedAssignment {
    double weight = 1.0;
    PartialAssignment assignment;

    bool operator==(const WeightedAssignment&) const = default;
};

struct RoutineBlock {
    /// Instance of the environment's time factor; empty if it has none.
    std::string time;
    std::vector<WeightedAssignment> options;

    bool operator==(const RoutineBlock&) const = default;
};

/// A daily routine: each day walks the blocks in order, drawing one option
/// per block by weight.
struct RoutineSpec {
    std::vector<RoutineBlock> blocks;
    int days = 1;
    double noise = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const RoutineSpec&) const = default;
};

struct SynthesisStats {
    std::size_t slots = 0;
    std::size_t perturbed = 0;
};

/// Throws InvalidArgument (bad weights, noise, days) or the
/// normalize_scene errors for options that do not fit the environment.
void validate_routine(const RoutineSpec& spec, const Environment& env);

/// Generates days x blocks scenes (before change deduplication). Each
/// factor slot of a drawn scene is replaced, with probability `noise`, by a
/// uniformly drawn legal instance. Deterministic given spec.seed.
ContextHistory synthesize_history(const RoutineSpec& spec, const Environment& env, SynthesisStats* stats = nullptr);

struct SizeVerdict {
    bool ok = false;
    std::size_t required = 0;
    std::size_t actual = 0;
};

/// At least ten scenes per environment factor are needed for reliable
/// association estimates.
SizeVerdict check_minimum_size(const ContextHistory& history, const Environment& env);

} // namespace capforge
