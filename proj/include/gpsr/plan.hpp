#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace gpsr::planner {

struct PlanStep {
  std::string text;
  std::size_t index = 0;
  bool operator==(const PlanStep&) const = default;
};

std::vector<PlanStep> make_steps(const std::vector<std::string>& sentences);

struct SkillCall {
  std::string function;
  std::map<std::string, std::string> args;
  std::size_t origin = 0;  // index of the step sentence this call came from

  std::string arg(const std::string& name) const;
  bool operator==(const SkillCall&) const = default;
};

// "pick(object=apple, location=dining table)"
std::string describe(const SkillCall& call);

struct Plan {
  std::vector<SkillCall> calls;
  std::string source_command;
  long ledger_version = 0;
  bool operator==(const Plan&) const = default;
};

// Canonical plan document: {source_command, ledger_version, calls:[{function, args, origin}]},
// fixed field order, args sorted by name.
nlohmann::ordered_json plan_to_json(const Plan& plan);
std::string serialize_plan(const Plan& plan);
// Throws SchemaError on malformed documents or calls that do not match the registry.
Plan parse_plan(const nlohmann::json& doc);
Plan deserialize_plan(const std::string& document);

nlohmann::ordered_json call_to_json(const SkillCall& call);
SkillCall call_from_json(const nlohmann::json& j);

}  // namespace gpsr::planner
