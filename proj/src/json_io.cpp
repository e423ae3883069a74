#include "capforge/json_io.hpp"

#include "capforge/error.hpp"

#include <fstream>
#include <sstream>

namespace capforge {

namespace {

const Json& field(const Json& doc, const char* key)
{
    if (!doc.is_object())
        throw Error(ErrorCode::ParseError, key, "expected an object");
    auto it = doc.find(key);
    if (it == doc.end())
        throw Error(ErrorCode::ParseError, key, "missing field");
    return *it;
}

template <class T>
T get(const Json& doc, const char* key)
{
    try {
        return field(doc, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, key, e.what());
    }
}

template <class T>
T get_or(const Json& doc, const char* key, T fallback)
{
    if (!doc.is_object() || !doc.contains(key) || doc.at(key).is_null())
        return fallback;
    return get<T>(doc, key);
}

std::string string_value(const Json& value, const std::string& where)
{
    if (!value.is_string())
        throw Error(ErrorCode::ParseError, where, "expected a string");
    return value.get<std::string>();
}

Json pairs_object(const std::vector<std::pair<std::string, std::string>>& pairs)
{
    Json out = Json::object();
    for (const auto& [k, v] : pairs)
        out[k] = v;
    return out;
}

} // namespace

Json to_json(const EnvironmentConfig& config)
{
    Json factors = Json::array();
    for (const auto& factor : config.factors) {
        Json f;
        f["id"] = factor.id;
        f["kind"] = to_string(factor.kind);
        f["instances"] = factor.instances;
        if (factor.default_instance)
            f["default_instance"] = *factor.default_instance;
        f["controllable"] = factor.controllable;
        if (factor.anchor)
            f["anchor"] = Json{{"x", factor.anchor->x}, {"y", factor.anchor->y}};
        factors.push_back(std::move(f));
    }
    return Json{{"name", config.name}, {"factors", std::move(factors)}};
}

EnvironmentConfig environment_from_json(const Json& doc)
{
    EnvironmentConfig config;
    config.name = get_or<std::string>(doc, "name", "");
    const auto& factors = field(doc, "factors");
    if (!factors.is_array())
        throw Error(ErrorCode::ParseError, "factors", "expected an array");
    for (const auto& f : factors) {
        ContextFactor factor;
        factor.id = get<std::string>(f, "id");
        const auto kind = get<std::string>(f, "kind");
        const auto parsed = parse_factor_kind(kind);
        if (!parsed)
            throw Error(ErrorCode::ParseError, "kind", "unknown factor kind '" + kind + "'");
        factor.kind = *parsed;
        if (f.contains("instances"))
            factor.instances = get<std::vector<std::string>>(f, "instances");
        else if (factor.kind == FactorKind::Time)
            factor.instances = default_time_instances();
        else
            throw Error(ErrorCode::ParseError, "instances", "missing for factor '" + factor.id + "'");
        if (f.contains("default_instance") && !f.at("default_instance").is_null())
            factor.default_instance = get<std::string>(f, "default_instance");
        factor.controllable = get_or<bool>(f, "controllable", false);
        if (f.contains("anchor") && !f.at("anchor").is_null()) {
            const auto& a = f.at("anchor");
            factor.anchor = Anchor{get<double>(a, "x"), get<double>(a, "y")};
        }
        config.factors.push_back(std::move(factor));
    }
    return config;
}

Json to_json(const InstanceRef& ref)
{
    return Json{{"factor", ref.factor}, {"instance", ref.instance}};
}

InstanceRef instance_ref_from_json(const Json& doc)
{
    return {get<std::string>(doc, "factor"), get<std::string>(doc, "instance")};
}

Json to_json(const Policy& policy)
{
    Json trigger = Json::object();
    for (const auto& [factor, selected] : policy.trigger)
        trigger[factor] = selected;
    return Json{{"id", policy.id}, {"action", to_json(policy.action)}, {"trigger", std::move(trigger)}};
}

Policy policy_from_json(const Json& doc)
{
    Policy policy;
    policy.id = get_or<std::string>(doc, "id", "");
    policy.action = instance_ref_from_json(field(doc, "action"));
    const auto& trigger = field(doc, "trigger");
    if (!trigger.is_object())
        throw Error(ErrorCode::ParseError, "trigger", "expected an object");
    for (const auto& [factor, selected] : trigger.items()) {
        if (!selected.is_array())
            throw Error(ErrorCode::ParseError, "trigger", "selection for '" + factor + "' must be an array");
        std::vector<std::string> instances;
        for (const auto& v : selected)
            instances.push_back(string_value(v, "trigger"));
        policy.trigger.emplace_back(factor, std::move(instances));
    }
    return policy;
}

PartialAssignment partial_from_json(const Json& doc)
{
    if (!doc.is_object())
        throw Error(ErrorCode::ParseError, "assignments", "expected an object");
    PartialAssignment partial;
    for (const auto& [factor, instance] : doc.items())
        partial[factor] = string_value(instance, "assignments");
    return partial;
}

Json to_json(const ContextScene& scene, const Environment& env)
{
    Json out;
    out["seq"] = scene.seq;
    if (scene.day)
        out["day"] = *scene.day;
    out["assignments"] = pairs_object(scene_labels(scene, env));
    return out;
}

ContextScene scene_from_json(const Json& doc, const Environment& env)
{
    auto scene = normalize_scene(partial_from_json(field(doc, "assignments")), env, get<std::int64_t>(doc, "seq"));
    if (doc.contains("day") && !doc.at("day").is_null())
        scene.day = get<int>(doc, "day");
    return scene;
}

Json to_json(const ContextHistory& history, const Environment& env)
{
    Json scenes = Json::array();
    for (const auto& scene : history.scenes())
        scenes.push_back(to_json(scene, env));
    return Json{{"env_ref", history.env_ref()}, {"scenes", std::move(scenes)}};
}

Json to_json(const RoutineSpec& spec)
{
    Json blocks = Json::array();
    for (const auto& block : spec.blocks) {
        Json options = Json::array();
        for (const auto& option : block.options) {
            Json assignment = Json::object();
            for (const auto& [k, v] : option.assignment)
                assignment[k] = v;
            options.push_back(Json{{"weight", option.weight}, {"assignments", std::move(assignment)}});
        }
        blocks.push_back(Json{{"time", block.time}, {"options", std::move(options)}});
    }
    return Json{{"blocks", std::move(blocks)}, {"days", spec.days}, {"noise", spec.noise}, {"seed", spec.seed}};
}

RoutineSpec routine_from_json(const Json& doc)
{
    RoutineSpec spec;
    spec.days = get_or<int>(doc, "days", 1);
    spec.noise = get_or<double>(doc, "noise", 0.0);
    spec.seed = get_or<std::uint64_t>(doc, "seed", 0);
    const auto& blocks = field(doc, "blocks");
    if (!blocks.is_array())
        throw Error(ErrorCode::ParseError, "blocks", "expected an array");
    for (const auto& b : blocks) {
        RoutineBlock block;
        block.time = get_or<std::string>(b, "time", "");
        const auto& options = field(b, "options");
        if (!options.is_array())
            throw Error(ErrorCode::ParseError, "options", "expected an array");
        for (const auto& o : options)
            block.options.push_back({get_or<double>(o, "weight", 1.0), partial_from_json(field(o, "assignments"))});
        spec.blocks.push_back(std::move(block));
    }
    return spec;
}

Json to_json(const AssociationReport& report)
{
    Json u = Json::object();
    Json concurrency = Json::object();
    for (const auto& entry : report.factors) {
        u[entry.factor] = entry.u;
        Json counts = Json::object();
        for (const auto& [instance, count] : entry.concurrency)
            counts[instance] = count;
        concurrency[entry.factor] = std::move(counts);
    }
    return Json{{"action", to_json(report.action)},
                {"scene_count", report.scene_count},
                {"action_support", report.action_support},
                {"u_by_factor", std::move(u)},
                {"concurrency", std::move(concurrency)}};
}

Json to_json(const MetricsReport& m)
{
    return Json{{"scenes", m.total()},  {"tp", m.tp},         {"fp", m.fp},
                {"fn", m.fn},           {"tn", m.tn},         {"precision", m.precision},
                {"recall", m.recall},   {"f_score", m.f_score}};
}

Json to_json(const TestCase& c)
{
    return Json{{"id", c.id},
                {"policy_id", c.policy_id},
                {"focus_factor", c.focus_factor},
                {"condition", static_cast<int>(c.condition)},
                {"suggested", to_json(c.suggested)},
                {"fillers", pairs_object(c.fillers)},
                {"rationale", c.rationale}};
}

TestCase test_case_from_json(const Json& doc)
{
    TestCase c;
    c.id = get<std::string>(doc, "id");
    c.policy_id = get<std::string>(doc, "policy_id");
    c.focus_factor = get<std::string>(doc, "focus_factor");
    const int condition = get<int>(doc, "condition");
    if (condition < 1 || condition > 3)
        throw Error(ErrorCode::ParseError, "condition", "must be 1, 2 or 3");
    c.condition = static_cast<Condition>(condition);
    c.suggested = instance_ref_from_json(field(doc, "suggested"));
    const auto& fillers = field(doc, "fillers");
    if (!fillers.is_object())
        throw Error(ErrorCode::ParseError, "fillers", "expected an object");
    for (const auto& [factor, instance] : fillers.items())
        c.fillers.emplace_back(factor, string_value(instance, "fillers"));
    c.rationale = get_or<std::string>(doc, "rationale", "");
    return c;
}

Json to_json(const TestSuite& suite)
{
    Json cases = Json::array();
    for (const auto& c : suite.cases)
        cases.push_back(to_json(c));
    return Json{{"policy_id", suite.policy_id},
                {"threshold", suite.threshold},
                {"seed", suite.seed},
                {"scene_count", suite.scene_count},
                {"warnings", suite.warnings},
                {"cases", std::move(cases)}};
}

TestSuite suite_from_json(const Json& doc)
{
    TestSuite suite;
    suite.policy_id = get<std::string>(doc, "policy_id");
    suite.threshold = get_or<double>(doc, "threshold", 0.5);
    suite.seed = get_or<std::uint64_t>(doc, "seed", 0);
    suite.scene_count = get_or<std::size_t>(doc, "scene_count", 0);
    suite.warnings = get_or<std::vector<std::string>>(doc, "warnings", {});
    const auto& cases = field(doc, "cases");
    if (!cases.is_array())
        throw Error(ErrorCode::ParseError, "cases", "expected an array");
    for (const auto& c : cases)
        suite.cases.push_back(test_case_from_json(c));
    return suite;
}

Json to_json(const EnactmentResult& result, const Environment& env)
{
    Json detail = Json::array();
    for (const auto& m : result.match.detail)
        detail.push_back(Json{{"factor", env.factor(m.factor).id},
                              {"observed", env.instance_name(m.factor, m.observed)},
                              {"matched", m.matched}});
    return Json{{"case_id", result.case_id},
                {"policy_id", result.policy_id},
                {"triggered", result.triggered},
                {"detail", std::move(detail)},
                {"scene", pairs_object(scene_labels(result.scene, env))}};
}

Json to_json(const CalibrationTable& table)
{
    Json cells = Json::array();
    for (const auto& c : table.cells)
        cells.push_back(Json{{"factors", c.factors},
                             {"scenes", c.scenes},
                             {"supra_threshold", c.supra_threshold},
                             {"rule_u", c.rule_u},
                             {"max_other_u", c.max_other_u},
                             {"degenerate", c.degenerate}});
    return Json{{"threshold", table.threshold}, {"noise", table.noise}, {"seed", table.seed}, {"cells", std::move(cells)}};
}

Json to_json(const ExperimentReport& r)
{
    Json steps = Json::array();
    for (const auto& s : r.steps)
        steps.push_back(Json{{"iteration", s.iteration},
                             {"case", to_json(s.test_case)},
                             {"decision", to_string(s.decision)},
                             {"changed", s.changed}});
    return Json{{"seed", r.seed},
                {"noise", r.noise},
                {"train_scenes", r.train_scenes},
                {"eval_scenes", r.eval_scenes},
                {"initial_policy", to_json(r.initial_policy)},
                {"final_policy", to_json(r.final_policy)},
                {"initial", to_json(r.initial)},
                {"final", to_json(r.final)},
                {"regenerations", r.regenerations},
                {"cases_viewed", r.cases_viewed},
                {"termination", to_string(r.termination)},
                {"non_terminated", r.non_terminated},
                {"steps", std::move(steps)}};
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::NotFound, path.string(), "cannot open file");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string(), e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::NotFound, path.string(), "cannot write file");
    out << doc.dump(2) << '\n';
}

Environment load_environment(const std::filesystem::path& path)
{
    return validate_environment(environment_from_json(read_json_file(path)));
}

Policy load_policy(const std::filesystem::path& path)
{
    return policy_from_json(read_json_file(path));
}

ContextHistory read_history(std::istream& in, const Environment& env)
{
    ContextHistory history(env.ref());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json doc;
        try {
            doc = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no), e.what());
        }
        history.push(scene_from_json(doc, env));
    }
    return history;
}

std::string history_line(const ContextScene& scene, const Environment& env)
{
    return to_json(scene, env).dump();
}

void write_history(std::ostream& out, const ContextHistory& history, const Environment& env)
{
    for (const auto& scene : history.scenes())
        out << history_line(scene, env) << '\n';
}

ContextHistory load_history(const std::filesystem::path& path, const Environment& env)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::NotFound, path.string(), "cannot open file");
    return read_history(in, env);
}

void save_history(const std::filesystem::path& path, const ContextHistory& history, const Environment& env)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::NotFound, path.string(), "cannot write file");
    write_history(out, history, env);
}

} // namespace capforge
