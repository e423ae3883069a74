#include "capforge/error.hpp"
#include "capforge/history.hpp"
#include "capforge/json_io.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace capforge;

namespace {

Environment study()
{
    return load_environment(CAPFORGE_DATA_DIR "/study_home/environment.json");
}

ContextHistory plain(const Environment& env, std::size_t n)
{
    ContextHistory h(env.ref());
    for (std::size_t i = 0; i < n; ++i) {
        ContextScene s;
        s.seq = static_cast<std::int64_t>(i);
        s.assignments.assign(env.size(), 0);
        s.assignments[1] = i % env.factor(1).instances.size();
        h.push(s);
    }
    return h;
}

std::vector<std::int64_t> seqs(const ContextHistory& h)
{
    std::vector<std::int64_t> out;
    for (const auto& s : h.scenes())
        out.push_back(s.seq);
    return out;
}

} // namespace

TEST(AppendScene, IdenticalAssignmentRegisteredOnce)
{
    const auto env = study();
    ContextHistory h(env.ref());
    EXPECT_TRUE(append_scene(h, env, {{"time", "noon"}, {"location", "sofa"}}));
    EXPECT_FALSE(append_scene(h, env, {{"time", "noon"}, {"location", "sofa"}}));
    EXPECT_EQ(h.size(), 1u);
}

TEST(AppendScene, ChangeRegistersNewScene)
{
    const auto env = study();
    ContextHistory h(env.ref());
    append_scene(h, env, {{"time", "noon"}, {"tv", "on"}});
    append_scene(h, env, {{"time", "noon"}, {"tv", "off"}});
    ASSERT_EQ(h.size(), 2u);
    EXPECT_EQ(h[0].seq, 0);
    EXPECT_EQ(h[1].seq, 1);
}

TEST(AppendScene, RecordedDayGivesOneScenePerChange)
{
    const auto env = study();
    ContextHistory h(env.ref());
    const std::vector<PartialAssignment> day = {
        {{"time", "early-morning"}, {"location", "bed"}, {"activity", "sleeping"}},
        {{"time", "morning"}, {"location", "kitchen"}, {"activity", "cooking"}},
        {{"time", "morning"}, {"location", "dining_table"}, {"activity", "eating"}},
        {{"time", "noon"}, {"location", "sofa"}, {"activity", "eating"}, {"tv", "on"}},
        {{"time", "afternoon"}, {"location", "desk"}, {"activity", "working"}},
        {{"time", "evening"}, {"location", "sofa"}, {"activity", "reading"}, {"music", "on"}},
        {{"time", "night"}, {"location", "sofa"}, {"activity", "phone"}},
        {{"time", "night"}, {"location", "bed"}, {"activity", "sleeping"}},
    };
    EXPECT_EQ(h.begin_day(), 0);
    for (const auto& a : day)
        append_scene(h, env, a);
    ASSERT_EQ(h.size(), 8u);
    for (const auto& s : h.scenes())
        EXPECT_EQ(s.day, 0);
}

TEST(AppendScene, SameSceneOnNewDayIsRegistered)
{
    const auto env = study();
    ContextHistory h(env.ref());
    h.begin_day();
    append_scene(h, env, {{"time", "night"}, {"location", "bed"}});
    h.begin_day();
    EXPECT_TRUE(append_scene(h, env, {{"time", "night"}, {"location", "bed"}}));
    EXPECT_EQ(h.back().day, 1);
}

TEST(AppendScene, NeverMutatesEarlierScenes)
{
    Rng rng(8);
    const auto env = gen::environment(rng, 5);
    ContextHistory h(env.ref());
    std::vector<ContextScene> snapshot;
    for (int i = 0; i < 300; ++i) {
        PartialAssignment a;
        for (const auto& f : env.factors())
            a[f.id] = f.instances[rng.below(f.instances.size())];
        if (rng.chance(0.05))
            h.begin_day();
        if (append_scene(h, env, a))
            snapshot.push_back(h.back());
        ASSERT_EQ(h.size(), snapshot.size());
        for (std::size_t k = 0; k < snapshot.size(); ++k)
            ASSERT_EQ(h[k], snapshot[k]);
    }
}

TEST(ContextHistory, PushRejectsNonIncreasingSeq)
{
    const auto env = study();
    auto h = plain(env, 3);
    ContextScene s = h.back();
    try {
        h.push(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonMonotonicSeq);
    }
    s.seq = 10;
    h.push(s);
    EXPECT_EQ(h.next_seq(), 11);
}

TEST(SplitHistory, EightyScenes)
{
    const auto env = study();
    const auto parts = split_history(plain(env, 80), 0.75, 1);
    EXPECT_EQ(parts.train.size(), 60u);
    EXPECT_EQ(parts.eval.size(), 20u);
}

TEST(SplitHistory, TwoScenes)
{
    const auto env = study();
    const auto parts = split_history(plain(env, 2), 0.75, 1);
    EXPECT_EQ(parts.train.size(), 1u);
    EXPECT_EQ(parts.eval.size(), 1u);
}

TEST(SplitHistory, Errors)
{
    const auto env = study();
    EXPECT_THROW(split_history(plain(env, 1), 0.75, 1), Error);
    EXPECT_THROW(split_history(plain(env, 10), 0.0, 1), Error);
    EXPECT_THROW(split_history(plain(env, 10), 1.0, 1), Error);
    try {
        split_history(plain(env, 1), 0.5, 1);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::HistoryTooSmall);
    }
}

TEST(SplitHistory, DeterministicPartition)
{
    Rng rng(10);
    for (int round = 0; round < 100; ++round) {
        const auto env = gen::environment(rng, 4);
        const auto h = gen::history(rng, env, 2 + rng.below(200));
        const auto seed = rng.next();
        const auto a = split_history(h, 0.75, seed, &env, InstanceRef{"device", "on"});
        const auto b = split_history(h, 0.75, seed, &env, InstanceRef{"device", "on"});
        ASSERT_EQ(seqs(a.train), seqs(b.train));
        ASSERT_EQ(seqs(a.eval), seqs(b.eval));

        auto all = seqs(a.train);
        const auto ev = seqs(a.eval);
        all.insert(all.end(), ev.begin(), ev.end());
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all, seqs(h));
        const auto tr = seqs(a.train);
        EXPECT_TRUE(std::is_sorted(tr.begin(), tr.end()));
        EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end()));
    }
}

TEST(SplitHistory, StratifiedKeepsActionShare)
{
    const auto env = study();
    ContextHistory h(env.ref());
    for (int i = 0; i < 100; ++i)
        append_scene(h, env, {{"time", i % 2 ? "noon" : "night"}, {"tv", i % 4 == 0 ? "on" : "off"}});
    const auto parts = split_history(h, 0.75, 3, &env, InstanceRef{"tv", "on"});
    const auto tv = env.factor_index("tv");
    auto count_on = [&](const ContextHistory& part) {
        return std::count_if(part.scenes().begin(), part.scenes().end(),
                             [&](const ContextScene& s) { return s.assignments[tv] == 1; });
    };
    EXPECT_EQ(parts.train.size(), 75u);
    EXPECT_EQ(count_on(parts.train), 19);
    EXPECT_EQ(count_on(parts.eval), 6);
}

TEST(SplitHistory, WholeDaysInOrder)
{
    const auto env = study();
    ContextHistory h(env.ref());
    const char* times[] = {"morning", "noon", "evening", "night"};
    for (int d = 0; d < 8; ++d) {
        h.begin_day();
        for (int k = 0; k < 4; ++k)
            append_scene(h, env, {{"time", times[k]}});
    }
    const auto parts = split_history(h, 0.75, 99);
    ASSERT_EQ(parts.train.size(), 24u);
    EXPECT_EQ(parts.train.back().day, 5);
    EXPECT_EQ(parts.eval.scenes().front().day, 6);
    EXPECT_EQ(parts.eval.size(), 8u);
}

TEST(SplitHistory, DaysKeepOneOnEachSide)
{
    const auto env = study();
    ContextHistory h(env.ref());
    h.begin_day();
    for (const char* t : {"morning", "noon", "evening"})
        append_scene(h, env, {{"time", t}});
    h.begin_day();
    append_scene(h, env, {{"time", "night"}});
    const auto parts = split_history(h, 0.99, 0);
    EXPECT_EQ(parts.train.size(), 3u);
    EXPECT_EQ(parts.eval.size(), 1u);
}

TEST(SynthesizeHistory, SingleBlockNoNoise)
{
    const auto env = study();
    RoutineSpec spec;
    spec.blocks = {{"noon", {{1.0, {{"location", "sofa"}, {"activity", "eating"}, {"tv", "on"}}}}}};
    spec.days = 1;
    const auto h = synthesize_history(spec, env);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0], ([&] {
                  auto s = normalize_scene({{"time", "noon"}, {"location", "sofa"}, {"activity", "eating"}, {"tv", "on"}},
                                           env, 0);
                  s.day = 0;
                  return s;
              }()));
}

TEST(SynthesizeHistory, NoiseRateMatchesBinomial)
{
    const auto env = study();
    RoutineSpec spec;
    spec.blocks = {
        {"morning", {{1.0, {{"location", "kitchen"}}}}},
        {"noon", {{1.0, {{"location", "sofa"}}}}},
        {"evening", {{1.0, {{"location", "desk"}}}}},
        {"night", {{1.0, {{"location", "bed"}}}}},
    };
    spec.days = 10;
    spec.noise = 0.1;
    spec.seed = 11;
    SynthesisStats stats;
    const auto h = synthesize_history(spec, env, &stats);
    EXPECT_EQ(stats.slots, 40u * env.size());
    EXPECT_LE(h.size(), 40u);
    EXPECT_GE(h.size(), 36u);
    const double mean = 0.1 * static_cast<double>(stats.slots);
    const double sd = std::sqrt(static_cast<double>(stats.slots) * 0.1 * 0.9);
    EXPECT_LT(std::abs(static_cast<double>(stats.perturbed) - mean), 4.0 * sd);
}

TEST(SynthesizeHistory, NoiseFreeScenesComeFromBlocks)
{
    const auto env = study();
    const auto spec = routine_from_json(read_json_file(CAPFORGE_DATA_DIR "/study_home/routine.json"));
    std::set<std::vector<std::size_t>> allowed;
    for (const auto& block : spec.blocks)
        for (const auto& option : block.options) {
            auto a = option.assignment;
            a["time"] = block.time;
            allowed.insert(normalize_scene(a, env, 0).assignments);
        }
    const auto h = synthesize_history(spec, env);
    EXPECT_EQ(h.size(), 180u);
    for (const auto& s : h.scenes())
        ASSERT_TRUE(allowed.contains(s.assignments));
}

TEST(SynthesizeHistory, DeterministicGivenSeed)
{
    const auto env = study();
    auto spec = routine_from_json(read_json_file(CAPFORGE_DATA_DIR "/study_home/routine.json"));
    spec.noise = 0.2;
    const auto a = synthesize_history(spec, env);
    const auto b = synthesize_history(spec, env);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        ASSERT_EQ(a[i], b[i]);
    spec.seed += 1;
    const auto c = synthesize_history(spec, env);
    bool differs = c.size() != a.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i)
        differs = !(a[i] == c[i]);
    EXPECT_TRUE(differs);
}

TEST(SynthesizeHistory, RoutineValidation)
{
    const auto env = study();
    RoutineSpec spec;
    spec.blocks = {{"noon", {{1.0, {{"location", "sofa"}}}}}};
    EXPECT_NO_THROW(validate_routine(spec, env));

    auto bad = spec;
    bad.blocks[0].options[0].weight = 0.0;
    EXPECT_THROW(validate_routine(bad, env), Error);
    bad = spec;
    bad.noise = 1.5;
    EXPECT_THROW(validate_routine(bad, env), Error);
    bad = spec;
    bad.days = 0;
    EXPECT_THROW(validate_routine(bad, env), Error);
    bad = spec;
    bad.blocks[0].time = "teatime";
    EXPECT_THROW(validate_routine(bad, env), Error);
    bad = spec;
    bad.blocks[0].options[0].assignment["garden"] = "x";
    EXPECT_THROW(validate_routine(bad, env), Error);
}

TEST(CheckMinimumSize, Boundary)
{
    const auto env = study();
    const auto ok = check_minimum_size(plain(env, 80), env);
    EXPECT_TRUE(ok.ok);
    const auto short_by_one = check_minimum_size(plain(env, 79), env);
    EXPECT_FALSE(short_by_one.ok);
    EXPECT_EQ(short_by_one.required, 80u);
    EXPECT_EQ(short_by_one.actual, 79u);
}

TEST(CheckMinimumSize, FiveFactorsFiftyScenes)
{
    Rng rng(12);
    const auto env = gen::environment(rng, 5);
    EXPECT_TRUE(check_minimum_size(gen::history(rng, env, 50), env).ok);
    EXPECT_FALSE(check_minimum_size(gen::history(rng, env, 49), env).ok);
}
