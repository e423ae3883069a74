#pragma once

#include "capforge/context_model.hpp"
#include "capforge/history.hpp"
#include "capforge/json_io.hpp"
#include "capforge/testgen.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace httplib {
class Server;
}

namespace capforge {

/// Colour of an instance on the authoring surface: unselected, selected in
/// the active policy, or part of the displayed test case (wins over pink).
enum class DisplayState { Blue, Pink, Red };

std::string_view to_string(DisplayState state) noexcept;

using DisplayMap = std::vector<std::pair<std::string, std::vector<std::pair<std::string, DisplayState>>>>;

DisplayMap display_states(const Environment& env, const Policy* active, const TestCase* displayed);
Json to_json(const DisplayMap& states);

struct Response {
    int status = 200;
    Json body;
};

struct SessionOptions {
    std::optional<std::filesystem::path> history_path;
    std::optional<std::filesystem::path> policies_path;
    double threshold = 0.5;
    std::uint64_t seed = 0;
};

/// One environment, one history and the policies authored against them.
/// Mutations are serialized; reads run concurrently.
class Session {
public:
    Session(Environment env, ContextHistory history, SessionOptions options = {});

    /// Routes one request. `query` carries URL parameters.
    Response handle(std::string_view method,
                    std::string_view path,
                    const std::string& body,
                    const std::map<std::string, std::string>& query = {});

    const Environment& environment() const noexcept { return env_; }

    /// Adds a policy without going through HTTP (used when loading files).
    void add_policy(const Policy& policy);

private:
    struct PolicyEntry {
        ValidatedPolicy policy;
        std::uint64_t version = 0;
    };
    struct CachedSuite {
        std::uint64_t version = 0;
        double threshold = 0.0;
        std::uint64_t seed = 0;
        bool valid = false;
        TestSuite suite;
    };

    Response dispatch(std::string_view method, std::string_view path, const Json& body,
                      const std::map<std::string, std::string>& query);

    Json get_states(const std::map<std::string, std::string>& query) const;
    Json post_scene(const Json& body);
    Json post_day();
    Json post_synthesize(const Json& body);
    Json list_policies() const;
    Response create_policy(const Json& body);
    Json update_policy(const std::string& id, const Json& body);
    Json delete_policy(const std::string& id);
    Json post_report(const std::string& id) const;
    Json post_suite(const std::string& id, const std::map<std::string, std::string>& query);
    Json post_enact(const std::string& id, const std::string& case_id);
    Json post_refine(const std::string& id, const std::string& case_id, const Json& body);
    Json post_metrics(const std::string& id, const Json& body) const;

    PolicyEntry& entry(const std::string& id);
    const PolicyEntry& entry(const std::string& id) const;
    const TestCase& find_case(const std::string& id, const std::string& case_id) const;
    void persist_policies() const;
    void invalidate_suites();

    Environment env_;
    ContextHistory history_;
    SessionOptions options_;

    mutable std::shared_mutex mutex_;
    std::vector<std::string> order_;
    std::map<std::string, PolicyEntry> policies_;
    std::map<std::string, CachedSuite> suites_;
    std::optional<std::string> active_policy_;
    std::optional<std::pair<std::string, std::string>> displayed_case_;
    std::uint64_t next_policy_number_ = 1;
};

/// Forwards every request on `server` to `session`.
void mount(httplib::Server& server, Session& session);

} // namespace capforge
