// capforge command-line entry point.

#include "capforge/association.hpp"
#include "capforge/error.hpp"
#include "capforge/experiment.hpp"
#include "capforge/history.hpp"
#include "capforge/json_io.hpp"
#include "capforge/policy_engine.hpp"
#include "capforge/random.hpp"
#include "capforge/service.hpp"
#include "capforge/testgen.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

using namespace capforge;

namespace {

enum class Format { Table, Json, Both };

bool wants_table(Format f) { return f != Format::Json; }
bool wants_json(Format f) { return f != Format::Table; }

void add_format(CLI::App* cmd, Format& format, Format fallback)
{
    format = fallback;
    cmd->add_option("--format", format, "table, json or both")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Format>{{"table", Format::Table}, {"json", Format::Json}, {"both", Format::Both}},
            CLI::ignore_case));
}

std::string fixed(double v, int digits = 3)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

InstanceRef parse_action(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
        throw Error(ErrorCode::InvalidArgument, text, "expected factor=instance");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

void print_report_table(const AssociationReport& report)
{
    std::printf("action %s=%s  support %zu / %zu scenes\n", report.action.factor.c_str(),
                report.action.instance.c_str(), report.action_support, report.scene_count);
    std::size_t width = 6;
    for (const auto& e : report.factors)
        width = std::max(width, e.factor.size());
    std::printf("%-*s  %7s  %s\n", static_cast<int>(width), "factor", "U", "concurrency");
    for (const auto& e : report.factors) {
        std::string counts;
        for (const auto& [instance, count] : e.concurrency)
            counts += (counts.empty() ? "" : "  ") + instance + ":" + std::to_string(count);
        std::printf("%-*s  %7.4f  %s\n", static_cast<int>(width), e.factor.c_str(), e.u, counts.c_str());
    }
}

void print_metrics_table(const MetricsReport& m)
{
    std::printf("scenes %zu  tp %zu  fp %zu  fn %zu  tn %zu\n", m.total(), m.tp, m.fp, m.fn, m.tn);
    std::printf("precision %s  recall %s  f_score %s\n", fixed(m.precision).c_str(), fixed(m.recall).c_str(),
                fixed(m.f_score).c_str());
}

void print_suite_table(const TestSuite& suite)
{
    std::printf("policy %s  threshold %s  seed %llu  %zu case(s)\n", suite.policy_id.c_str(),
                fixed(suite.threshold, 2).c_str(), static_cast<unsigned long long>(suite.seed), suite.cases.size());
    for (const auto& w : suite.warnings)
        std::printf("warning: %s\n", w.c_str());
    for (const auto& c : suite.cases) {
        std::string fillers;
        for (const auto& [f, v] : c.fillers)
            fillers += " " + f + "=" + v;
        std::printf("  %-20s cond %d  %s=%s |%s\n    %s\n", c.id.c_str(), static_cast<int>(c.condition),
                    c.suggested.factor.c_str(), c.suggested.instance.c_str(), fillers.c_str(), c.rationale.c_str());
    }
}

void print_calibration_table(const CalibrationTable& table)
{
    std::printf("# threshold %s  noise %s  seed %llu  (rule uses 2 factors)\n", fixed(table.threshold, 2).c_str(),
                fixed(table.noise, 2).c_str(), static_cast<unsigned long long>(table.seed));
    std::printf("%7s  %6s  %15s  %15s  %11s\n", "factors", "scenes", "U>threshold", "rule U", "max other U");
    for (const auto& c : table.cells) {
        std::string rule;
        for (double u : c.rule_u)
            rule += (rule.empty() ? "" : "/") + fixed(u, 2);
        std::printf("%7zu  %6zu  %15zu  %15s  %11s%s\n", c.factors, c.scenes, c.supra_threshold, rule.c_str(),
                    fixed(c.max_other_u, 3).c_str(), c.degenerate ? "  (degenerate)" : "");
    }
}

void print_experiment_table(const ExperimentReport& r)
{
    std::printf("seed %llu  noise %s  train %zu  eval %zu  regenerations %zu  cases %zu  end %s%s\n",
                static_cast<unsigned long long>(r.seed), fixed(r.noise, 2).c_str(), r.train_scenes, r.eval_scenes,
                r.regenerations, r.cases_viewed, std::string(to_string(r.termination)).c_str(),
                r.non_terminated ? " (non-terminated)" : "");
    std::printf("  %-8s  %9s  %9s  %9s\n", "", "precision", "recall", "f_score");
    std::printf("  %-8s  %9s  %9s  %9s\n", "initial", fixed(r.initial.precision).c_str(),
                fixed(r.initial.recall).c_str(), fixed(r.initial.f_score).c_str());
    std::printf("  %-8s  %9s  %9s  %9s\n", "final", fixed(r.final.precision).c_str(), fixed(r.final.recall).c_str(),
                fixed(r.final.f_score).c_str());
    std::printf("  final trigger: %s\n", to_json(r.final_policy).at("trigger").dump().c_str());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"capforge: author, test and refine context-aware policies"};
    app.require_subcommand(1);

    std::string env_path, history_path, policy_path, suite_path, routine_path, out_path, case_id, action_text;
    std::uint64_t seed = default_seed();
    double threshold = 0.5;
    Format format = Format::Table;

    // validate
    auto* validate = app.add_subcommand("validate", "Check an environment (and optionally a policy)");
    validate->add_option("--env", env_path, "environment JSON")->required();
    validate->add_option("--policy", policy_path, "policy JSON");

    // synthesize
    std::optional<double> noise;
    auto* synth = app.add_subcommand("synthesize", "Generate a history from a routine");
    synth->add_option("--env", env_path)->required();
    synth->add_option("--routine", routine_path)->required();
    synth->add_option("--out", out_path, "history JSONL (stdout if omitted)");
    synth->add_option("--seed", seed, "overrides the routine's seed");
    synth->add_option("--noise", noise, "overrides the routine's noise");

    // assoc
    auto* assoc = app.add_subcommand("assoc", "Uncertainty coefficients and concurrency counts for an action");
    assoc->add_option("--env", env_path)->required();
    assoc->add_option("--history", history_path)->required();
    auto* action_opt = assoc->add_option("--action", action_text, "factor=instance");
    assoc->add_option("--policy", policy_path, "take the action from a policy")->excludes(action_opt);
    add_format(assoc, format, Format::Both);

    // eval
    std::string split = "all";
    double train_fraction = 0.75;
    auto* eval = app.add_subcommand("eval", "Score a policy against recorded history");
    eval->add_option("--env", env_path)->required();
    eval->add_option("--history", history_path)->required();
    eval->add_option("--policy", policy_path)->required();
    eval->add_option("--split", split, "all, train or eval")->check(CLI::IsMember({"all", "train", "eval"}));
    eval->add_option("--train-fraction", train_fraction);
    eval->add_option("--seed", seed);
    add_format(eval, format, Format::Both);

    // gen-tests
    auto* gen = app.add_subcommand("gen-tests", "Generate the unit test suite for a policy");
    gen->add_option("--env", env_path)->required();
    gen->add_option("--history", history_path)->required();
    gen->add_option("--policy", policy_path)->required();
    gen->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path, "write the suite document here");
    add_format(gen, format, Format::Json);

    // enact
    auto* enact_cmd = app.add_subcommand("enact", "Simulate one test case against a policy");
    enact_cmd->add_option("--env", env_path)->required();
    enact_cmd->add_option("--policy", policy_path)->required();
    enact_cmd->add_option("--suite", suite_path, "suite document from gen-tests")->required();
    enact_cmd->add_option("--case", case_id)->required();

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Calibration sweep and scripted refinement runs");
    experiment->require_subcommand(1);
    std::string grid = "sweep";
    double cal_noise = 0.05;
    auto* calibrate = experiment->add_subcommand("calibrate", "Count supra-threshold factors over a grid");
    calibrate->add_option("--grid", grid, "sweep (10..50 scenes) or minimum (10 per factor)")
        ->check(CLI::IsMember({"sweep", "minimum"}));
    calibrate->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
    calibrate->add_option("--noise", cal_noise)->check(CLI::Range(0.0, 1.0));
    calibrate->add_option("--seed", seed);
    add_format(calibrate, format, Format::Table);

    std::string hidden_path, initial_path, mode_text = "accept-if-consistent";
    std::size_t seeds = 1;
    std::size_t case_cap = 20;
    auto* refine = experiment->add_subcommand("refine", "Guided refinement with a scripted user");
    refine->add_option("--env", env_path)->required();
    refine->add_option("--routine", routine_path)->required();
    refine->add_option("--hidden", hidden_path, "policy the scripted user really wants")->required();
    refine->add_option("--initial", initial_path, "policy the user starts from")->required();
    refine->add_option("--mode", mode_text, "accept-all, accept-if-consistent or reject-all");
    refine->add_option("--seed", seed, "first seed");
    refine->add_option("--seeds", seeds, "number of consecutive seeds to run");
    refine->add_option("--noise", noise, "overrides the routine's noise");
    refine->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
    refine->add_option("--case-cap", case_cap);
    add_format(refine, format, Format::Table);

    // serve
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string policies_path;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--env", env_path)->required();
    serve->add_option("--history", history_path, "history JSONL; created if missing");
    serve->add_option("--policies", policies_path, "policy array JSON; rewritten on every edit");
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
    serve->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const auto env = load_environment(env_path);
            std::printf("environment %s: %zu factors, ref %s\n", env.name().c_str(), env.size(), env.ref().c_str());
            if (!policy_path.empty()) {
                const auto policy = validate_policy(load_policy(policy_path), env);
                std::printf("policy %s: %zu trigger factor(s)\n", policy.id().c_str(), policy.trigger().size());
            }
            return 0;
        }

        if (synth->parsed()) {
            const auto env = load_environment(env_path);
            auto spec = routine_from_json(read_json_file(routine_path));
            if (synth->count("--seed") > 0)
                spec.seed = seed;
            if (noise)
                spec.noise = *noise;
            SynthesisStats stats;
            const auto history = synthesize_history(spec, env, &stats);
            if (out_path.empty())
                write_history(std::cout, history, env);
            else
                save_history(out_path, history, env);
            std::fprintf(stderr, "%zu scenes, %zu of %zu slots perturbed\n", history.size(), stats.perturbed,
                         stats.slots);
            return 0;
        }

        if (assoc->parsed()) {
            const auto env = load_environment(env_path);
            const auto history = load_history(history_path, env);
            InstanceRef action;
            if (!policy_path.empty())
                action = load_policy(policy_path).action;
            else if (!action_text.empty())
                action = parse_action(action_text);
            else
                throw Error(ErrorCode::InvalidArgument, "--action", "give --action or --policy");
            const auto report = build_report(history, env, action);
            if (wants_table(format))
                print_report_table(report);
            if (wants_json(format))
                std::cout << to_json(report).dump(2) << '\n';
            return 0;
        }

        if (eval->parsed()) {
            const auto env = load_environment(env_path);
            const auto history = load_history(history_path, env);
            const auto policy = validate_policy(load_policy(policy_path), env);
            MetricsReport metrics;
            if (split == "all") {
                metrics = evaluate(policy, history, env);
            } else {
                const auto parts = split_history(history, train_fraction, seed, &env, policy.policy().action);
                metrics = evaluate(policy, split == "train" ? parts.train : parts.eval, env);
            }
            if (wants_table(format))
                print_metrics_table(metrics);
            if (wants_json(format))
                std::cout << to_json(metrics).dump(2) << '\n';
            return 0;
        }

        if (gen->parsed()) {
            const auto env = load_environment(env_path);
            const auto history = load_history(history_path, env);
            const auto policy = validate_policy(load_policy(policy_path), env);
            const auto report = build_report(history, env, policy.policy().action);
            const auto suite = generate_suite(env, policy, report, {threshold, seed});
            for (const auto& w : suite.warnings)
                std::fprintf(stderr, "warning: %s\n", w.c_str());
            if (!out_path.empty())
                write_json_file(out_path, to_json(suite));
            if (wants_table(format))
                print_suite_table(suite);
            if (wants_json(format) && out_path.empty())
                std::cout << to_json(suite).dump(2) << '\n';
            return 0;
        }

        if (enact_cmd->parsed()) {
            const auto env = load_environment(env_path);
            const auto policy = validate_policy(load_policy(policy_path), env);
            const auto suite = suite_from_json(read_json_file(suite_path));
            const auto* test_case = suite.find(case_id);
            if (test_case == nullptr)
                throw Error(ErrorCode::NotFound, case_id, "no such case in the suite");
            std::cout << to_json(enact(env, policy, *test_case), env).dump(2) << '\n';
            return 0;
        }

        if (calibrate->parsed()) {
            CalibrationOptions options;
            options.cells = grid == "minimum" ? minimum_history_grid() : sweep_grid();
            options.threshold = threshold;
            options.noise = cal_noise;
            options.seed = seed;
            const auto table = run_calibration(options);
            if (wants_table(format))
                print_calibration_table(table);
            if (wants_json(format))
                std::cout << to_json(table).dump(2) << '\n';
            return 0;
        }

        if (refine->parsed()) {
            const auto env = load_environment(env_path);
            const auto routine = routine_from_json(read_json_file(routine_path));
            const auto hidden = load_policy(hidden_path);
            const auto initial = load_policy(initial_path);
            const auto mode = parse_refinement_mode(mode_text);
            if (!mode)
                throw Error(ErrorCode::InvalidArgument, mode_text, "unknown refinement mode");
            ExperimentOptions options;
            options.threshold = threshold;
            options.case_cap = case_cap;
            options.noise = noise;
            Json runs = Json::array();
            for (std::size_t k = 0; k < seeds; ++k) {
                const auto report = run_refinement_experiment(env, routine, hidden, initial, *mode, seed + k, options);
                if (wants_table(format))
                    print_experiment_table(report);
                runs.push_back(to_json(report));
            }
            if (wants_json(format))
                std::cout << (seeds == 1 ? runs.at(0) : runs).dump(2) << '\n';
            return 0;
        }

        if (serve->parsed()) {
            auto env = load_environment(env_path);
            SessionOptions options;
            options.threshold = threshold;
            options.seed = seed;
            ContextHistory history(env.ref());
            if (!history_path.empty()) {
                options.history_path = history_path;
                if (std::filesystem::exists(history_path))
                    history = load_history(history_path, env);
            }
            std::vector<Policy> policies;
            if (!policies_path.empty()) {
                options.policies_path = policies_path;
                if (std::filesystem::exists(policies_path))
                    for (const auto& doc : read_json_file(policies_path))
                        policies.push_back(policy_from_json(doc));
            }
            Session session(std::move(env), std::move(history), options);
            for (const auto& p : policies)
                session.add_policy(p);

            httplib::Server server;
            mount(server, session);
            std::fprintf(stderr, "listening on http://%s:%d\n", host.c_str(), port);
            if (!server.listen(host, port)) {
                std::fprintf(stderr, "error: cannot listen on %s:%d\n", host.c_str(), port);
                return 1;
            }
            return 0;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
