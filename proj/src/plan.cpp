#include "gpsr/plan.hpp"

#include "gpsr/error.hpp"
#include "gpsr/skill_registry.hpp"

namespace gpsr::planner {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<PlanStep> make_steps(const std::vector<std::string>& sentences)
{
  std::vector<PlanStep> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back({sentences[i], i});
  return out;
}

std::string SkillCall::arg(const std::string& name) const
{
  auto it = args.find(name);
  return it == args.end() ? std::string{} : it->second;
}

std::string describe(const SkillCall& call)
{
  std::string out = call.function + "(";
  bool first = true;
  for (const auto& [k, v] : call.args) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + v;
  }
  return out + ")";
}

ordered_json call_to_json(const SkillCall& call)
{
  ordered_json args = ordered_json::object();
  for (const auto& [k, v] : call.args) args[k] = v;
  ordered_json j;
  j["function"] = call.function;
  j["args"] = std::move(args);
  j["origin"] = call.origin;
  return j;
}

SkillCall call_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("function") || !j.at("function").is_string())
    throw SchemaError("plan.calls[].function: expected string");
  SkillCall call;
  call.function = j.at("function").get<std::string>();
  if (j.contains("args")) {
    if (!j.at("args").is_object()) throw SchemaError("plan.calls[].args: expected object");
    for (const auto& [k, v] : j.at("args").items()) {
      if (!v.is_string()) throw SchemaError("plan.calls[].args." + k + ": expected string");
      call.args[k] = v.get<std::string>();
    }
  }
  call.origin = j.value("origin", std::size_t{0});
  if (auto err = skills::signature_error(call.function, call.args)) throw SchemaError("plan.calls[]: " + *err);
  return call;
}

ordered_json plan_to_json(const Plan& plan)
{
  ordered_json j;
  j["source_command"] = plan.source_command;
  j["ledger_version"] = plan.ledger_version;
  ordered_json calls = ordered_json::array();
  for (const auto& c : plan.calls) calls.push_back(call_to_json(c));
  j["calls"] = std::move(calls);
  return j;
}

std::string serialize_plan(const Plan& plan) { return plan_to_json(plan).dump(2); }

Plan parse_plan(const json& doc)
{
  if (!doc.is_object()) throw SchemaError("plan: expected object");
  Plan plan;
  plan.source_command = doc.value("source_command", "");
  plan.ledger_version = doc.value("ledger_version", 0L);
  if (!doc.contains("calls") || !doc.at("calls").is_array()) throw SchemaError("plan.calls: expected array");
  for (const auto& c : doc.at("calls")) plan.calls.push_back(call_from_json(c));
  return plan;
}

Plan deserialize_plan(const std::string& document)
{
  try {
    return parse_plan(json::parse(document));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("plan document: ") + e.what());
  }
}

}  // namespace gpsr::planner
