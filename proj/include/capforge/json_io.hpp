#pragma once

#include "capforge/association.hpp"
#include "capforge/context_model.hpp"
#include "capforge/experiment.hpp"
#include "capforge/history.hpp"
#include "capforge/policy_engine.hpp"
#include "capforge/testgen.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace capforge {

/// Documents keep insertion order so output follows environment order.
using Json = nlohmann::ordered_json;

// Decoders throw Error(ParseError, <field>) on malformed documents; they do
// not validate against an environment unless one is passed.

Json to_json(const EnvironmentConfig& config);
EnvironmentConfig environment_from_json(const Json& doc);

Json to_json(const Policy& policy);
Policy policy_from_json(const Json& doc);

Json to_json(const InstanceRef& ref);
InstanceRef instance_ref_from_json(const Json& doc);

PartialAssignment partial_from_json(const Json& doc);

Json to_json(const ContextScene& scene, const Environment& env);
ContextScene scene_from_json(const Json& doc, const Environment& env);

Json to_json(const ContextHistory& history, const Environment& env);

Json to_json(const RoutineSpec& spec);
RoutineSpec routine_from_json(const Json& doc);

Json to_json(const AssociationReport& report);
Json to_json(const MetricsReport& metrics);

Json to_json(const TestCase& test_case);
TestCase test_case_from_json(const Json& doc);
Json to_json(const TestSuite& suite);
TestSuite suite_from_json(const Json& doc);

Json to_json(const EnactmentResult& result, const Environment& env);

Json to_json(const CalibrationTable& table);
Json to_json(const ExperimentReport& report);

// Files

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

Environment load_environment(const std::filesystem::path& path);
Policy load_policy(const std::filesystem::path& path);

/// JSON Lines, one scene per line: {"seq", "day"?, "assignments"}.
/// Partial assignments are completed with defaults; seq must increase.
ContextHistory read_history(std::istream& in, const Environment& env);
void write_history(std::ostream& out, const ContextHistory& history, const Environment& env);
std::string history_line(const ContextScene& scene, const Environment& env);
ContextHistory load_history(const std::filesystem::path& path, const Environment& env);
void save_history(const std::filesystem::path& path, const ContextHistory& history, const Environment& env);

} // namespace capforge
