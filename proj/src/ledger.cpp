#include "gpsr/ledger.hpp"

#include <fstream>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr::planner {

using nlohmann::json;

json ledger_to_json(const PromptLedger& l)
{
  json examples = json::array();
  for (const auto& e : l.worked_examples) {
    json j = {{"command", e.command}, {"steps", e.steps}};
    if (e.plan) j["plan"] = json::parse(plan_to_json(*e.plan).dump());
    examples.push_back(std::move(j));
  }
  json entries = json::array();
  for (const auto& e : l.perception_entries) entries.push_back(e.to_json());
  return {{"name", l.name},
          {"version", l.version},
          {"transcriber_lexicon", l.transcriber_lexicon.to_json()},
          {"planner_preamble", l.planner_preamble},
          {"environment_facts", l.environment_facts},
          {"worked_examples", examples},
          {"feedback_lines", l.feedback_lines},
          {"perception_entries", entries}};
}

PromptLedger ledger_from_json(const json& j)
{
  if (!j.is_object()) throw SchemaError("ledger: expected object");
  PromptLedger l;
  l.name = j.value("name", "");
  l.version = j.value("version", 1L);
  if (l.version < 1) throw SchemaError("ledger.version: must be >= 1");
  if (j.contains("transcriber_lexicon")) l.transcriber_lexicon = speech::TranscriptionLexicon::from_json(j.at("transcriber_lexicon"));
  l.planner_preamble = j.value("planner_preamble", std::string(kMinimalPreamble));
  if (l.planner_preamble.empty()) throw SchemaError("ledger.planner_preamble: must not be empty");
  l.environment_facts = j.value("environment_facts", std::vector<std::string>{});
  l.feedback_lines = j.value("feedback_lines", std::vector<std::string>{});
  for (const auto& e : j.value("worked_examples", json::array())) {
    WorkedExample ex;
    ex.command = e.at("command").get<std::string>();
    ex.steps = e.value("steps", std::vector<std::string>{});
    if (e.contains("plan")) ex.plan = parse_plan(e.at("plan"));
    l.worked_examples.push_back(std::move(ex));
  }
  for (const auto& e : j.value("perception_entries", json::array()))
    l.perception_entries.push_back(perception::PromptEntry::from_json(e));
  return l;
}

PromptLedger load_ledger_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open ledger file '" + path + "'");
  try {
    return ledger_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ledger file: ") + e.what());
  }
}

json update_to_json(const LedgerUpdate& update)
{
  return std::visit(
      [](const auto& u) -> json {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, AddLexicon>) {
          const char* kind = u.kind == AddLexicon::Kind::object   ? "object"
                             : u.kind == AddLexicon::Kind::person ? "person"
                                                                  : "location";
          return {{"update", "add_lexicon"}, {"kind", kind}, {"phrases", u.phrases}};
        } else if constexpr (std::is_same_v<T, AddFeedback>) {
          return {{"update", "add_feedback"}, {"line", u.line}};
        } else if constexpr (std::is_same_v<T, AddPerceptionEntry>) {
          return {{"update", "add_perception_entry"}, {"entry", u.entry.to_json()}};
        } else {
          return {{"update", "add_environment_fact"}, {"line", u.line}};
        }
      },
      update);
}

PromptLedger update_ledger(const PromptLedger& ledger, const LedgerUpdate& update)
{
  PromptLedger next = ledger;
  std::visit(
      [&](const auto& u) {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, AddLexicon>) {
          if (u.phrases.empty()) throw PreconditionError("add_lexicon: no phrases");
          for (const auto& p : u.phrases) {
            if (text::trim(p).empty()) throw PreconditionError("add_lexicon: empty phrase");
            switch (u.kind) {
              case AddLexicon::Kind::object: next.transcriber_lexicon.add_object(p); break;
              case AddLexicon::Kind::person: next.transcriber_lexicon.add_person(p); break;
              case AddLexicon::Kind::location: next.transcriber_lexicon.add_location(p); break;
            }
          }
        } else if constexpr (std::is_same_v<T, AddFeedback>) {
          if (text::trim(u.line).empty()) throw PreconditionError("add_feedback: empty line");
          next.feedback_lines.push_back(u.line);
        } else if constexpr (std::is_same_v<T, AddPerceptionEntry>) {
          next.perception_entries.push_back(u.entry);
        } else {
          if (text::trim(u.line).empty()) throw PreconditionError("add_environment_fact: empty line");
          next.environment_facts.push_back(u.line);
        }
      },
      update);
  next.version = ledger.version + 1;
  return next;
}

}  // namespace gpsr::planner
