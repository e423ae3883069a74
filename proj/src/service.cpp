#include "capforge/service.hpp"

#include "capforge/association.hpp"
#include "capforge/error.hpp"
#include "capforge/policy_engine.hpp"

#include "httplib.h"

#include <fstream>
#include <mutex>

namespace capforge {

namespace {

std::vector<std::string> segments(std::string_view path)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto next = path.find('/', pos);
        const auto piece = path.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (!piece.empty())
            out.emplace_back(piece);
        if (next == std::string_view::npos)
            break;
        pos = next + 1;
    }
    return out;
}

int status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotFound:
        return 404;
    case ErrorCode::StaleReport:
    case ErrorCode::PolicyMismatch:
    case ErrorCode::DuplicatePolicyId:
        return 409;
    default:
        return 400;
    }
}

Json error_body(const Error& e)
{
    return Json{{"error", to_string(e.code())}, {"subject", e.subject()}, {"message", e.what()}};
}

double query_double(const std::map<std::string, std::string>& query, const char* key, double fallback)
{
    auto it = query.find(key);
    if (it == query.end())
        return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, key, "not a number");
    }
}

std::uint64_t query_seed(const std::map<std::string, std::string>& query, std::uint64_t fallback)
{
    auto it = query.find("seed");
    if (it == query.end())
        return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "seed", "not an unsigned integer");
    }
}

} // namespace

std::string_view to_string(DisplayState state) noexcept
{
    switch (state) {
    case DisplayState::Blue: return "blue";
    case DisplayState::Pink: return "pink";
    case DisplayState::Red: return "red";
    }
    return "?";
}

DisplayMap display_states(const Environment& env, const Policy* active, const TestCase* displayed)
{
    auto selected = [&](const std::string& factor, const std::string& instance) {
        if (active == nullptr)
            return false;
        for (const auto& [f, instances] : active->trigger)
            if (f == factor)
                return std::find(instances.begin(), instances.end(), instance) != instances.end();
        return false;
    };
    auto shown = [&](const std::string& factor, const std::string& instance) {
        if (displayed == nullptr)
            return false;
        if (displayed->suggested.factor == factor && displayed->suggested.instance == instance)
            return true;
        for (const auto& [f, v] : displayed->fillers)
            if (f == factor && v == instance)
                return true;
        return false;
    };

    DisplayMap out;
    for (const auto& factor : env.factors()) {
        auto& row = out.emplace_back(factor.id, std::vector<std::pair<std::string, DisplayState>>{}).second;
        for (const auto& instance : factor.instances) {
            auto state = DisplayState::Blue;
            if (shown(factor.id, instance))
                state = DisplayState::Red;
            else if (selected(factor.id, instance))
                state = DisplayState::Pink;
            row.emplace_back(instance, state);
        }
    }
    return out;
}

Json to_json(const DisplayMap& states)
{
    Json out = Json::object();
    for (const auto& [factor, row] : states) {
        Json r = Json::object();
        for (const auto& [instance, state] : row)
            r[instance] = to_string(state);
        out[factor] = std::move(r);
    }
    return out;
}

Session::Session(Environment env, ContextHistory history, SessionOptions options)
    : env_(std::move(env))
    , history_(std::move(history))
    , options_(std::move(options))
{
    if (history_.env_ref().empty() && history_.empty())
        history_ = ContextHistory(env_.ref());
    if (history_.env_ref() != env_.ref())
        throw Error(ErrorCode::EnvironmentMismatch, history_.env_ref(), "history belongs to another environment");
}

void Session::add_policy(const Policy& policy)
{
    std::unique_lock lock(mutex_);
    Policy p = policy;
    if (p.id.empty())
        p.id = "p" + std::to_string(next_policy_number_++);
    if (policies_.contains(p.id))
        throw Error(ErrorCode::DuplicatePolicyId, p.id);
    policies_.emplace(p.id, PolicyEntry{validate_policy(p, env_), 0});
    order_.push_back(p.id);
}

Response Session::handle(std::string_view method,
                         std::string_view path,
                         const std::string& body,
                         const std::map<std::string, std::string>& query)
{
    try {
        Json doc;
        if (!body.empty()) {
            try {
                doc = Json::parse(body);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::ParseError, "body", e.what());
            }
        }
        return dispatch(method, path, doc, query);
    } catch (const Error& e) {
        return {status_for(e.code()), error_body(e)};
    } catch (const nlohmann::json::exception& e) {
        return {400, Json{{"error", "ParseError"}, {"subject", "body"}, {"message", e.what()}}};
    }
}

Response Session::dispatch(std::string_view method,
                           std::string_view path,
                           const Json& body,
                           const std::map<std::string, std::string>& query)
{
    const auto seg = segments(path);
    const auto n = seg.size();
    auto is = [&](std::string_view m) { return method == m; };

    if (n >= 1 && seg[0] == "environment") {
        if (n == 1 && is("GET")) {
            std::shared_lock lock(mutex_);
            return {200, to_json(env_.config())};
        }
        if (n == 2 && seg[1] == "states" && is("GET")) {
            std::shared_lock lock(mutex_);
            return {200, get_states(query)};
        }
    }
    if (n >= 1 && seg[0] == "history") {
        if (n == 1 && is("GET")) {
            std::shared_lock lock(mutex_);
            return {200, to_json(history_, env_)};
        }
        if (n == 2 && is("POST")) {
            std::unique_lock lock(mutex_);
            if (seg[1] == "scenes")
                return {201, post_scene(body)};
            if (seg[1] == "days")
                return {201, post_day()};
            if (seg[1] == "synthesize")
                return {200, post_synthesize(body)};
        }
    }
    if (n >= 1 && seg[0] == "policies") {
        if (n == 1 && is("GET")) {
            std::shared_lock lock(mutex_);
            return {200, list_policies()};
        }
        if (n == 1 && is("POST")) {
            std::unique_lock lock(mutex_);
            return create_policy(body);
        }
        if (n == 2 && is("GET")) {
            std::shared_lock lock(mutex_);
            return {200, to_json(entry(seg[1]).policy.policy())};
        }
        if (n == 2 && is("PUT")) {
            std::unique_lock lock(mutex_);
            return {200, update_policy(seg[1], body)};
        }
        if (n == 2 && is("DELETE")) {
            std::unique_lock lock(mutex_);
            return {200, delete_policy(seg[1])};
        }
        if (n == 3 && is("POST")) {
            if (seg[2] == "report") {
                std::shared_lock lock(mutex_);
                return {200, post_report(seg[1])};
            }
            if (seg[2] == "metrics") {
                std::shared_lock lock(mutex_);
                return {200, post_metrics(seg[1], body)};
            }
            if (seg[2] == "suite") {
                std::unique_lock lock(mutex_);
                return {200, post_suite(seg[1], query)};
            }
        }
        if (n == 5 && seg[2] == "cases" && is("POST")) {
            std::unique_lock lock(mutex_);
            if (seg[4] == "enact")
                return {200, post_enact(seg[1], seg[3])};
            if (seg[4] == "refine")
                return {200, post_refine(seg[1], seg[3], body)};
        }
    }
    throw Error(ErrorCode::NotFound, std::string(method) + " " + std::string(path), "no such endpoint");
}

Session::PolicyEntry& Session::entry(const std::string& id)
{
    auto it = policies_.find(id);
    if (it == policies_.end())
        throw Error(ErrorCode::NotFound, id, "unknown policy");
    return it->second;
}

const Session::PolicyEntry& Session::entry(const std::string& id) const
{
    auto it = policies_.find(id);
    if (it == policies_.end())
        throw Error(ErrorCode::NotFound, id, "unknown policy");
    return it->second;
}

const TestCase& Session::find_case(const std::string& id, const std::string& case_id) const
{
    auto it = suites_.find(id);
    const TestCase* found = it == suites_.end() ? nullptr : it->second.suite.find(case_id);
    if (found == nullptr)
        throw Error(ErrorCode::NotFound, case_id, "unknown test case");
    if (!it->second.valid)
        throw Error(ErrorCode::StaleReport, case_id, "the policy or history changed; regenerate the suite");
    return *found;
}

Json Session::get_states(const std::map<std::string, std::string>& query) const
{
    std::optional<std::string> policy_id = active_policy_;
    std::optional<std::string> case_id;
    if (displayed_case_ && displayed_case_->first == policy_id)
        case_id = displayed_case_->second;
    if (auto it = query.find("policy"); it != query.end()) {
        policy_id = it->second;
        case_id.reset();
    }
    if (auto it = query.find("case"); it != query.end())
        case_id = it->second;

    const Policy* policy = policy_id ? &entry(*policy_id).policy.policy() : nullptr;
    const TestCase* shown = policy_id && case_id ? &find_case(*policy_id, *case_id) : nullptr;

    Json out;
    out["policy"] = policy_id ? Json(*policy_id) : Json(nullptr);
    out["case"] = case_id && shown != nullptr ? Json(*case_id) : Json(nullptr);
    out["states"] = to_json(display_states(env_, policy, shown));
    return out;
}

Json Session::post_scene(const Json& body)
{
    const bool appended = append_scene(history_, env_, partial_from_json(body));
    if (appended)
        invalidate_suites();
    if (appended && options_.history_path) {
        std::ofstream out(*options_.history_path, std::ios::app);
        out << history_line(history_.back(), env_) << '\n';
    }
    return Json{{"appended", appended}, {"scene", to_json(history_.back(), env_)}};
}

void Session::invalidate_suites()
{
    for (auto& [id, cached] : suites_)
        cached.valid = false;
    displayed_case_.reset();
}

Json Session::post_day()
{
    return Json{{"day", history_.begin_day()}};
}

Json Session::post_synthesize(const Json& body)
{
    auto spec = routine_from_json(body);
    if (!body.contains("seed"))
        spec.seed = options_.seed;
    history_ = synthesize_history(spec, env_);
    invalidate_suites();
    if (options_.history_path)
        save_history(*options_.history_path, history_, env_);
    return Json{{"scene_count", history_.size()}};
}

Json Session::list_policies() const
{
    Json out = Json::array();
    for (const auto& id : order_)
        out.push_back(to_json(policies_.at(id).policy.policy()));
    return out;
}

Response Session::create_policy(const Json& body)
{
    Policy p = policy_from_json(body);
    if (p.id.empty()) {
        do
            p.id = "p" + std::to_string(next_policy_number_++);
        while (policies_.contains(p.id));
    }
    if (policies_.contains(p.id))
        throw Error(ErrorCode::DuplicatePolicyId, p.id);
    auto validated = validate_policy(p, env_);
    const Json doc = to_json(validated.policy());
    policies_.emplace(p.id, PolicyEntry{std::move(validated), 0});
    order_.push_back(p.id);
    active_policy_ = p.id;
    displayed_case_.reset();
    persist_policies();
    return {201, doc};
}

Json Session::update_policy(const std::string& id, const Json& body)
{
    auto& e = entry(id);
    Policy p = policy_from_json(body);
    if (!p.id.empty() && p.id != id)
        throw Error(ErrorCode::InvalidArgument, p.id, "policy id in body differs from the URL");
    p.id = id;
    e.policy = validate_policy(p, env_);
    ++e.version;
    if (auto it = suites_.find(id); it != suites_.end())
        it->second.valid = false;
    active_policy_ = id;
    displayed_case_.reset();
    persist_policies();
    return to_json(e.policy.policy());
}

Json Session::delete_policy(const std::string& id)
{
    entry(id);
    policies_.erase(id);
    suites_.erase(id);
    order_.erase(std::remove(order_.begin(), order_.end(), id), order_.end());
    if (active_policy_ == id)
        active_policy_.reset();
    if (displayed_case_ && displayed_case_->first == id)
        displayed_case_.reset();
    persist_policies();
    return Json{{"deleted", id}};
}

Json Session::post_report(const std::string& id) const
{
    return to_json(build_report(history_, env_, entry(id).policy.policy().action));
}

Json Session::post_suite(const std::string& id, const std::map<std::string, std::string>& query)
{
    auto& e = entry(id);
    const GenerationConfig config{query_double(query, "threshold", options_.threshold), query_seed(query, options_.seed)};
    auto& cached = suites_[id];
    const bool fresh = cached.valid && cached.version == e.version && cached.threshold == config.threshold
        && cached.seed == config.seed;
    if (!fresh) {
        const auto report = build_report(history_, env_, e.policy.policy().action);
        cached.suite = generate_suite(env_, e.policy, report, config);
        cached.version = e.version;
        cached.threshold = config.threshold;
        cached.seed = config.seed;
        cached.valid = true;
    }
    active_policy_ = id;
    displayed_case_.reset();
    return to_json(cached.suite);
}

Json Session::post_enact(const std::string& id, const std::string& case_id)
{
    const auto& e = entry(id);
    const auto& test_case = find_case(id, case_id);
    const auto result = enact(env_, e.policy, test_case);
    active_policy_ = id;
    displayed_case_ = std::make_pair(id, case_id);
    return to_json(result, env_);
}

Json Session::post_refine(const std::string& id, const std::string& case_id, const Json& body)
{
    auto& e = entry(id);
    const auto& test_case = find_case(id, case_id);
    const auto text = body.is_object() && body.contains("decision") ? body.at("decision") : Json();
    if (!text.is_string())
        throw Error(ErrorCode::InvalidDecision, "decision", "missing decision");
    const auto decision = parse_decision(text.get<std::string>());
    if (!decision)
        throw Error(ErrorCode::InvalidDecision, text.get<std::string>());

    auto refined = apply_refinement(env_, e.policy, test_case, *decision);
    if (!(refined == e.policy)) {
        e.policy = std::move(refined);
        ++e.version;
        suites_[id].valid = false;
        displayed_case_.reset();
        persist_policies();
    }
    active_policy_ = id;
    return to_json(e.policy.policy());
}

Json Session::post_metrics(const std::string& id, const Json& body) const
{
    const auto& e = entry(id);
    const Json opts = body.is_object() ? body : Json::object();
    const auto split = opts.value("split", std::string("all"));
    if (split == "all")
        return to_json(evaluate(e.policy, history_, env_));
    if (split != "train" && split != "eval")
        throw Error(ErrorCode::InvalidArgument, "split", "expected all, train or eval");
    const double fraction = opts.value("train_fraction", 0.75);
    const std::uint64_t seed = opts.value("seed", options_.seed);
    const auto parts = split_history(history_, fraction, seed, &env_, e.policy.policy().action);
    return to_json(evaluate(e.policy, split == "train" ? parts.train : parts.eval, env_));
}

void Session::persist_policies() const
{
    if (!options_.policies_path)
        return;
    Json out = Json::array();
    for (const auto& id : order_)
        out.push_back(to_json(policies_.at(id).policy.policy()));
    write_json_file(*options_.policies_path, out);
}

void mount(httplib::Server& server, Session& session)
{
    auto forward = [&session](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params)
            query[k] = v;
        const auto reply = session.handle(req.method, req.path, req.body, query);
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Put(R"(/.*)", forward);
    server.Delete(R"(/.*)", forward);
}

} // namespace capforge
