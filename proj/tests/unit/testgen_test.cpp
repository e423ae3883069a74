#include "capforge/error.hpp"
#include "capforge/json_io.hpp"
#include "capforge/testgen.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace capforge;

namespace {

Environment study()
{
    return load_environment(CAPFORGE_DATA_DIR "/study_home/environment.json");
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TestSuite fixture_suite(const std::string& name)
{
    const std::string dir = std::string(CAPFORGE_FIXTURE_DIR) + "/branch/" + name;
    const auto env = load_environment(dir + "/environment.json");
    const auto history = load_history(dir + "/history.jsonl", env);
    const auto policy = validate_policy(load_policy(dir + "/policy.json"), env);
    const auto report = build_report(history, env, policy.policy().action);
    return generate_suite(env, policy, report, {0.5, 7});
}

void expect_golden(const std::string& name)
{
    const auto produced = to_json(fixture_suite(name)).dump(2) + "\n";
    EXPECT_EQ(produced, slurp(std::string(CAPFORGE_GOLDEN_DIR) + "/" + name + ".json")) << name;
}

AssociationReport manual_report(const Environment& env, InstanceRef action,
                                std::vector<std::pair<std::string, double>> u,
                                std::map<std::string, std::vector<std::size_t>> counts = {})
{
    AssociationReport r;
    r.action = action;
    r.scene_count = 100;
    r.action_support = 30;
    for (const auto& f : env.factors()) {
        if (f.id == action.factor)
            continue;
        FactorAssociation a;
        a.factor = f.id;
        for (const auto& [id, value] : u)
            if (id == f.id)
                a.u = value;
        for (std::size_t i = 0; i < f.instances.size(); ++i) {
            const auto it = counts.find(f.id);
            a.concurrency.emplace_back(f.instances[i], it == counts.end() ? 0 : it->second.at(i));
        }
        r.factors.push_back(std::move(a));
    }
    return r;
}

} // namespace

TEST(BranchFixtures, CorrelatedMissing) { expect_golden("correlated_missing"); }
TEST(BranchFixtures, UncorrelatedIncluded) { expect_golden("uncorrelated_included"); }
TEST(BranchFixtures, CorrelatedIncluded) { expect_golden("correlated_included"); }
TEST(BranchFixtures, CorrelatedIncludedTieGivesNoCase) { expect_golden("correlated_included_tie"); }
TEST(BranchFixtures, UncorrelatedMissing) { expect_golden("uncorrelated_missing"); }

TEST(AssessFactor, FullTable)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}, {"time", {"evening"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"activity", 0.8}, {"time", 0.1}, {"location", 0.9}, {"music", 0.2}});
    EXPECT_EQ(assess_factor("activity", r, p, 0.5), Condition::CorrelatedMissing);
    EXPECT_EQ(assess_factor("time", r, p, 0.5), Condition::UncorrelatedIncluded);
    EXPECT_EQ(assess_factor("location", r, p, 0.5), Condition::CorrelatedIncluded);
    EXPECT_EQ(assess_factor("music", r, p, 0.5), Condition::UncorrelatedMissing);
    EXPECT_FALSE(assess_factor("tv", r, p, 0.5).has_value());
    EXPECT_FALSE(assess_factor("garden", r, p, 0.5).has_value());
}

TEST(AssessFactor, ThresholdIsStrict)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"activity", 0.5}});
    EXPECT_EQ(assess_factor("activity", r, p, 0.5), Condition::UncorrelatedMissing);
}

TEST(ComposeCase, UncorrelatedMissingNeverYieldsACase)
{
    Rng rng(41);
    for (int round = 0; round < 200; ++round) {
        const auto env = gen::environment(rng, 5);
        const auto p = validate_policy(gen::policy(rng, env), env);
        const auto h = gen::history(rng, env, 60, 0.7);
        AssociationReport r;
        try {
            r = build_report(h, env, {"device", "on"});
        } catch (const Error&) {
            continue;
        }
        for (std::size_t f = 1; f < env.size(); ++f)
            ASSERT_FALSE(compose_case(env, p, r, env.factor(f).id, Condition::UncorrelatedMissing, {0.5, 1}));
    }
}

TEST(ComposeCase, WalkthroughActivity)
{
    const auto env = study();
    const auto p = validate_policy({"tv-on", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"activity", 0.8}}, {{"activity", {20, 3, 0, 0, 0, 5, 0}}});
    const auto c = compose_case(env, p, r, "activity", Condition::CorrelatedMissing, {0.5, 0});
    ASSERT_TRUE(c);
    EXPECT_EQ(c->suggested, (InstanceRef{"activity", "eating"}));
    EXPECT_EQ(c->fillers, (std::vector<std::pair<std::string, std::string>>{{"location", "sofa"}}));
    EXPECT_EQ(c->size(), 2u);
}

TEST(ComposeCase, CorrelatedIncludedPrefersSofa)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"dining_table"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"location", 0.7}}, {{"location", {12, 3, 0, 0, 0, 0}}});
    const auto c = compose_case(env, p, r, "location", Condition::CorrelatedIncluded, {0.5, 0});
    ASSERT_TRUE(c);
    EXPECT_EQ(c->suggested, (InstanceRef{"location", "sofa"}));
    EXPECT_TRUE(c->fillers.empty());
    EXPECT_EQ(c->condition, Condition::CorrelatedIncluded);
}

TEST(ComposeCase, ConditionOneNeedsAnObservedCompanion)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"activity", 0.9}});
    EXPECT_FALSE(compose_case(env, p, r, "activity", Condition::CorrelatedMissing, {0.5, 0}));
}

TEST(ComposeCase, ConditionTwoTiesResolveInEnvironmentOrder)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"time", {"evening"}}}}, env);
    const auto r = manual_report(env, {"tv", "on"}, {{"time", 0.1}}, {{"time", {0, 4, 2, 2, 9, 0}}});
    const auto c = compose_case(env, p, r, "time", Condition::UncorrelatedIncluded, {0.5, 0});
    ASSERT_TRUE(c);
    EXPECT_EQ(c->suggested.instance, "noon");
}

TEST(GenerateSuite, StudyWalkthrough)
{
    const auto env = study();
    const auto history = load_history(CAPFORGE_DATA_DIR "/study_home/history.jsonl", env);
    const auto p = validate_policy(load_policy(CAPFORGE_DATA_DIR "/study_home/initial_policy.json"), env);
    const auto report = build_report(history, env, p.policy().action);
    const auto suite = generate_suite(env, p, report, {0.5, 42});
    ASSERT_EQ(suite.cases.size(), 2u);
    EXPECT_TRUE(suite.warnings.empty());
    for (const auto& c : suite.cases) {
        EXPECT_EQ(c.condition, Condition::CorrelatedMissing);
        EXPECT_EQ(c.size(), p.trigger().size() + 1);
    }
    EXPECT_EQ(suite.cases[0].suggested, (InstanceRef{"activity", "eating"}));
    EXPECT_EQ(suite.cases[1].suggested, (InstanceRef{"music", "off"}));

    // Accept both suggestions; the refined policy fires on the displayed case.
    auto refined = apply_refinement(env, p, suite.cases[0], Decision::AddSuggested);
    refined = apply_refinement(env, refined, suite.cases[1], Decision::AddSuggested);
    EXPECT_EQ(refined.policy().trigger,
              (std::vector<std::pair<std::string, std::vector<std::string>>>{
                  {"location", {"sofa"}}, {"activity", {"eating"}}, {"music", {"off"}}}));
    EXPECT_TRUE(enact(env, p, suite.cases[1]).triggered);
    TestCase shown = suite.cases[1];
    shown.fillers = {{"location", "sofa"}, {"activity", "eating"}};
    EXPECT_TRUE(enact(env, refined, shown).triggered);

    const auto again = generate_suite(env, refined, report, {0.5, 42});
    for (const auto& c : again.cases)
        EXPECT_NE(c.condition, Condition::CorrelatedMissing);
}

TEST(GenerateSuite, WarnsBelowMinimumHistory)
{
    const auto env = study();
    ContextHistory h(env.ref());
    append_scene(h, env, {{"time", "noon"}, {"tv", "on"}});
    append_scene(h, env, {{"time", "night"}});
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    const auto suite = generate_suite(env, p, build_report(h, env, {"tv", "on"}), {0.5, 0});
    ASSERT_EQ(suite.warnings.size(), 1u);
    EXPECT_NE(suite.warnings[0].find("80"), std::string::npos);
}

TEST(GenerateSuite, Errors)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    const auto stale = manual_report(env, {"music", "on"}, {});
    try {
        generate_suite(env, p, stale, {0.5, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StaleReport);
    }
    EXPECT_THROW(generate_suite(env, p, manual_report(env, {"tv", "on"}, {}), {1.5, 0}), Error);
}

TEST(Enact, DefaultsFillUnmentionedFactors)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"location", {"sofa"}}}}, env);
    TestCase c;
    c.id = "c1-activity";
    c.policy_id = "p";
    c.focus_factor = "activity";
    c.suggested = {"activity", "eating"};
    c.fillers = {{"location", "sofa"}};
    const auto result = enact(env, p, c);
    EXPECT_TRUE(result.triggered);
    const auto labels = scene_labels(result.scene, env);
    EXPECT_EQ(labels[0].second, "early-morning");
    EXPECT_EQ(labels[4].second, "off");

    c.policy_id = "other";
    try {
        enact(env, p, c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PolicyMismatch);
    }
}

TEST(ApplyRefinement, Decisions)
{
    const auto env = study();
    const auto p = validate_policy({"p", {"tv", "on"}, {{"time", {"evening"}}, {"location", {"sofa"}}}}, env);
    TestCase time_case;
    time_case.id = "c2-time";
    time_case.policy_id = "p";
    time_case.focus_factor = "time";
    time_case.condition = Condition::UncorrelatedIncluded;
    time_case.suggested = {"time", "noon"};

    const auto removed = apply_refinement(env, p, time_case, Decision::RemoveFocusFactor);
    EXPECT_EQ(removed.clause_for(env.factor_index("time")), nullptr);
    EXPECT_NE(removed.clause_for(env.factor_index("location")), nullptr);

    const auto widened = apply_refinement(env, p, time_case, Decision::WidenSelected);
    EXPECT_EQ(widened.policy().trigger[0].second, (std::vector<std::string>{"noon", "evening"}));

    EXPECT_EQ(apply_refinement(env, p, time_case, Decision::Dismiss), p);

    TestCase music_case = time_case;
    music_case.focus_factor = "music";
    music_case.suggested = {"music", "off"};
    try {
        apply_refinement(env, p, music_case, Decision::WidenSelected);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidDecision);
    }
    EXPECT_EQ(apply_refinement(env, p, music_case, Decision::RemoveFocusFactor), p);

    const auto only_time = validate_policy({"p", {"tv", "on"}, {{"time", {"evening"}}}}, env);
    EXPECT_THROW(apply_refinement(env, only_time, time_case, Decision::RemoveFocusFactor), Error);
}

TEST(ApplyRefinement, DecisionNames)
{
    for (auto d : {Decision::AddSuggested, Decision::RemoveFocusFactor, Decision::WidenSelected, Decision::Dismiss})
        EXPECT_EQ(parse_decision(to_string(d)), d);
    EXPECT_FALSE(parse_decision("maybe"));
}

TEST(SuiteProperties, StructuralInvariants)
{
    Rng rng(43);
    std::map<Condition, int> seen;
    int checked = 0;
    while (checked < 600) {
        const auto env = gen::environment(rng, 3 + rng.below(6));
        const auto p = validate_policy(gen::policy(rng, env), env);
        const auto h = gen::history(rng, env, 20 + rng.below(120), 0.3 + 0.7 * rng.unit());
        AssociationReport report;
        try {
            report = build_report(h, env, {"device", "on"});
        } catch (const Error&) {
            continue;
        }
        const GenerationConfig config{0.05 + 0.6 * rng.unit(), rng.next()};
        const auto suite = generate_suite(env, p, report, config);
        ++checked;

        ASSERT_LE(suite.cases.size(), env.size() - 1);
        std::set<std::string> factors;
        for (const auto& c : suite.cases) {
            ASSERT_TRUE(factors.insert(c.focus_factor).second);
            ASSERT_NE(c.condition, Condition::UncorrelatedMissing);
            ++seen[c.condition];
            const auto n = p.trigger().size();
            if (c.condition == Condition::CorrelatedMissing)
                ASSERT_EQ(c.size(), n + 1);
            else
                ASSERT_EQ(c.size(), n);
            const bool triggered = enact(env, p, c).triggered;
            ASSERT_EQ(triggered, c.condition == Condition::CorrelatedMissing) << c.id;
        }
        ASSERT_EQ(to_json(generate_suite(env, p, report, config)).dump(), to_json(suite).dump());
    }
    EXPECT_GT(seen[Condition::CorrelatedMissing], 0);
    EXPECT_GT(seen[Condition::UncorrelatedIncluded], 0);
    EXPECT_GT(seen[Condition::CorrelatedIncluded], 0);
}

TEST(SuiteProperties, AcceptedSuggestionLeavesConditionOne)
{
    Rng rng(44);
    int checked = 0;
    while (checked < 200) {
        const auto env = gen::environment(rng, 3 + rng.below(5));
        const auto p = validate_policy(gen::policy(rng, env), env);
        const auto h = gen::history(rng, env, 40 + rng.below(80), 0.8);
        AssociationReport report;
        try {
            report = build_report(h, env, {"device", "on"});
        } catch (const Error&) {
            continue;
        }
        const GenerationConfig config{0.2, 5};
        const auto suite = generate_suite(env, p, report, config);
        for (const auto& c : suite.cases) {
            if (c.condition != Condition::CorrelatedMissing)
                continue;
            ++checked;
            const auto refined = apply_refinement(env, p, c, Decision::AddSuggested);
            const auto next = generate_suite(env, refined, report, config);
            const auto* again = next.find("c1-" + c.focus_factor);
            ASSERT_EQ(again, nullptr);
        }
    }
}
