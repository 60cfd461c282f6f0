#include "gpsr/dialogue.hpp"

#include <set>

#include "gpsr/speech.hpp"
#include "gpsr/text.hpp"

namespace gpsr::dialogue {

using nlohmann::json;

OperatorScript OperatorScript::from_json(const json& j)
{
  OperatorScript s;
  if (!j.is_object()) throw SchemaError("script: expected object");
  for (const auto& t : j.value("turns", json::array())) {
    ScriptTurn turn;
    turn.match = t.value("match", "");
    if (t.contains("answer") && !t.at("answer").is_null()) turn.answer = t.at("answer").get<std::string>();
    if (t.contains("times")) {
      turn.times = t.at("times").get<int>();
      if (*turn.times < 1) throw SchemaError("script turn 'times' must be >= 1");
    }
    s.turns.push_back(std::move(turn));
  }
  const auto def = j.value("default", "no_response");
  if (def == "no_response") s.fallback = ScriptDefault::no_response;
  else if (def == "echo") s.fallback = ScriptDefault::echo;
  else throw SchemaError("script default must be no_response or echo, got '" + def + "'");
  return s;
}

json OperatorScript::to_json() const
{
  json turns_j = json::array();
  for (const auto& t : turns) {
    json tj = {{"match", t.match}, {"answer", t.answer ? json(*t.answer) : json(nullptr)}};
    if (t.times) tj["times"] = *t.times;
    turns_j.push_back(tj);
  }
  return {{"turns", turns_j}, {"default", fallback == ScriptDefault::echo ? "echo" : "no_response"}};
}

json DialogueTurn::to_json() const
{
  return {{"speaker", speaker},
          {"addressee", addressee},
          {"question", question},
          {"text", text ? json(*text) : json("NO_RESPONSE")},
          {"no_response", no_response()},
          {"corrected_text", corrected_text ? json(*corrected_text) : json(nullptr)},
          {"lexicon_version", lexicon_version},
          {"source", source}};
}

Dialogue::Dialogue(std::map<std::string, OperatorScript> scripts) : scripts_(std::move(scripts)) {}

DialogueTurn Dialogue::ask(const world::WorldState& w, const std::string& addressee, const std::string& question,
                           const planner::PromptLedger& ledger, long tick)
{
  const auto* person = w.find_person(addressee);
  if (!person) throw PreconditionError("ask: no person named '" + addressee + "'");

  DialogueTurn turn;
  turn.tick = tick;
  turn.speaker = person->name;
  turn.addressee = "robot";
  turn.question = question;
  turn.lexicon_version = ledger.version;

  if (!person->responsive) {
    turn.source = "unresponsive";
    return turn;
  }
  if (person->name == world::kOperator && live_) {
    turn.source = "live";
    turn.text = live_(question);
  } else {
    turn.source = "script";
    const auto key = person->script_ref.value_or(person->name);
    auto it = scripts_.find(key);
    if (it == scripts_.end()) it = scripts_.find(person->name);
    if (it != scripts_.end()) {
      const auto& script = it->second;
      const auto q = text::to_lower(question);
      bool matched = false;
      for (std::size_t i = 0; i < script.turns.size(); ++i) {
        const auto& t = script.turns[i];
        if (q.find(text::to_lower(t.match)) == std::string::npos) continue;
        auto& n = used_[{key, i}];
        if (t.times && n >= *t.times) continue;
        ++n;
        turn.text = t.answer;
        matched = true;
        break;
      }
      if (!matched && script.fallback == ScriptDefault::echo) turn.text = question;
    }
  }
  if (turn.text && text::trim(*turn.text).empty()) turn.text.reset();
  if (turn.text) turn.corrected_text = speech::transcribe(*turn.text, ledger.transcriber_lexicon).text;
  return turn;
}

std::optional<std::string> extract_slot(const std::string& answer, const std::string& kind,
                                        const std::vector<std::string>& known, const planner::PromptLedger& ledger,
                                        const planner::BackendLink& link)
{
  if (text::trim(answer).empty()) throw PreconditionError("extract_slot: empty answer");
  const auto resp = planner::exchange(link, ledger, lm::RequestKind::EXTRACT_SLOT,
                                      {{"answer", answer}, {"kind", kind}, {"candidates", known}});
  if (!resp.ok()) return std::nullopt;
  const auto value = resp.result.at("value").get<std::string>();
  for (const auto& k : known) {
    if (k == value) return value;
  }
  return std::nullopt;  // a remote model may invent names; only known ones count
}

Verdict verdict_from_answer(const std::optional<std::string>& answer, bool strict)
{
  Verdict v;
  if (!answer) {
    v.no_response = true;
    v.completed = !strict;
    return v;
  }
  v.feedback = *answer;
  static const std::set<std::string> negative = {"no", "not", "wrong", "incorrect", "nope", "didn't", "isn't"};
  for (const auto& w : text::words(*answer)) {
    if (negative.count(w)) {
      v.completed = false;
      break;
    }
  }
  return v;
}

}  // namespace gpsr::dialogue
