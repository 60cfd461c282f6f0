#include "gpsr/backend.hpp"

#include <sstream>

namespace gpsr::lm {

using nlohmann::json;

namespace {

constexpr std::pair<RequestKind, const char*> kKindNames[] = {
    {RequestKind::DECOMPOSE, "DECOMPOSE"},
    {RequestKind::GROUND, "GROUND"},
    {RequestKind::SUGGEST_LOCATIONS, "SUGGEST_LOCATIONS"},
    {RequestKind::EXTRACT_SLOT, "EXTRACT_SLOT"},
    {RequestKind::RECOVERY_STEPS, "RECOVERY_STEPS"},
    {RequestKind::ANSWER_QUESTION, "ANSWER_QUESTION"},
};

void require_string_array(const json& r, const char* key, bool non_empty, RequestKind kind)
{
  if (!r.contains(key) || !r.at(key).is_array())
    throw MalformedCompletion(to_string(kind) + ": result." + key + " must be an array");
  if (non_empty && r.at(key).empty()) throw MalformedCompletion(to_string(kind) + ": result." + key + " is empty");
  for (const auto& v : r.at(key)) {
    if (!v.is_string()) throw MalformedCompletion(to_string(kind) + ": result." + key + " must hold strings");
  }
}

void require_string(const json& r, const char* key, RequestKind kind)
{
  if (!r.contains(key) || !r.at(key).is_string())
    throw MalformedCompletion(to_string(kind) + ": result." + key + " must be a string");
}

}  // namespace

std::string to_string(RequestKind k)
{
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "UNKNOWN";
}

RequestKind request_kind_from(const std::string& s)
{
  for (const auto& [kind, name] : kKindNames) {
    if (s == name) return kind;
  }
  throw SchemaError("unknown request kind '" + s + "'");
}

json BackendResponse::to_json() const
{
  json j = {{"result", result}, {"raw", raw}};
  if (confidence) j["confidence"] = *confidence;
  if (failure) j["failure"] = {{"code", failure->code}, {"message", failure->message}, {"detail", failure->detail}};
  return j;
}

std::string render_prompt(const planner::PromptLedger& ledger, RequestKind kind, const json& payload)
{
  std::ostringstream out;
  out << ledger.planner_preamble << "\n";
  if (!ledger.environment_facts.empty()) {
    out << "\nEnvironment:\n";
    for (const auto& f : ledger.environment_facts) out << "- " << f << "\n";
  }
  if (!ledger.worked_examples.empty()) {
    out << "\nExamples:\n";
    for (const auto& e : ledger.worked_examples) {
      out << "Command: " << e.command << "\nSteps:\n";
      for (std::size_t i = 0; i < e.steps.size(); ++i) out << i + 1 << ". " << e.steps[i] << "\n";
      if (e.plan) out << "Plan: " << planner::plan_to_json(*e.plan).dump() << "\n";
    }
  }
  if (!ledger.feedback_lines.empty()) {
    out << "\nFeedback:\n";
    for (const auto& f : ledger.feedback_lines) out << "- " << f << "\n";
  }
  out << "\nRequest (" << to_string(kind) << "):\n" << payload.dump(2) << "\n";
  return out.str();
}

void check_result_shape(RequestKind kind, const json& r)
{
  if (!r.is_object()) throw MalformedCompletion(to_string(kind) + ": result must be an object");
  switch (kind) {
    case RequestKind::DECOMPOSE: require_string_array(r, "steps", true, kind); break;
    case RequestKind::RECOVERY_STEPS: require_string_array(r, "steps", false, kind); break;
    case RequestKind::SUGGEST_LOCATIONS: require_string_array(r, "locations", false, kind); break;
    case RequestKind::EXTRACT_SLOT: require_string(r, "value", kind); break;
    case RequestKind::ANSWER_QUESTION: require_string(r, "answer", kind); break;
    case RequestKind::GROUND: {
      if (!r.contains("calls") || !r.at("calls").is_array()) throw MalformedCompletion("GROUND: result.calls must be an array");
      for (const auto& c : r.at("calls")) {
        if (!c.is_object() || !c.contains("function") || !c.at("function").is_string())
          throw MalformedCompletion("GROUND: each call needs a function name");
        if (c.contains("args")) {
          if (!c.at("args").is_object()) throw MalformedCompletion("GROUND: call args must be an object");
          for (const auto& [k, v] : c.at("args").items()) {
            if (!v.is_string()) throw MalformedCompletion("GROUND: argument '" + k + "' must be a string");
          }
        }
        if (c.contains("origin") && !c.at("origin").is_number_unsigned())
          throw MalformedCompletion("GROUND: call origin must be a step index");
      }
      break;
    }
  }
}

}  // namespace gpsr::lm
