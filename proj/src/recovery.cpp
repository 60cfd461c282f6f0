#include "gpsr/recovery.hpp"

#include "gpsr/text.hpp"

namespace gpsr::recovery {

using nlohmann::json;
using planner::GroundingReason;
using planner::SkillCall;

namespace {

constexpr std::pair<ActionKind, const char*> kActionNames[] = {
    {ActionKind::ASK_OPERATOR_REPHRASE, "ASK_OPERATOR_REPHRASE"},
    {ActionKind::ASK_LOCATION, "ASK_LOCATION"},
    {ActionKind::SUGGEST_AND_VISIT, "SUGGEST_AND_VISIT"},
    {ActionKind::RETRY_SKILL, "RETRY_SKILL"},
    {ActionKind::ALTERNATIVE_STEPS, "ALTERNATIVE_STEPS"},
    {ActionKind::UPDATE_LEDGER_AND_REPLAN, "UPDATE_LEDGER_AND_REPLAN"},
    {ActionKind::GIVE_UP, "GIVE_UP"},
};

RecoveryAction act(ActionKind kind, json params = json::object()) { return {kind, std::move(params)}; }

RecoveryAction give_up(const std::string& why) { return act(ActionKind::GIVE_UP, {{"reason", why}}); }

bool can_replan(const RecoveryState& s, const RecoveryBudget& b) { return s.replans_used < b.max_replans; }
bool can_query(const RecoveryState& s, const RecoveryBudget& b) { return s.operator_queries_used < b.max_operator_queries; }

RecoveryAction recover_m1(const RecoveryState& s, const RecoveryBudget& b)
{
  if (!s.location_asked && can_query(s, b)) return act(ActionKind::ASK_LOCATION);
  if (s.suggestions_pending && can_replan(s, b)) return act(ActionKind::SUGGEST_AND_VISIT);
  if (!s.rephrased && can_query(s, b)) return act(ActionKind::ASK_OPERATOR_REPHRASE, {{"about", "location"}});
  return give_up("location still unknown and the budget is spent");
}

}  // namespace

std::string to_string(Mode m)
{
  switch (m) {
    case Mode::M1: return "M1";
    case Mode::M2: return "M2";
    case Mode::M3: return "M3";
  }
  return "?";
}

Mode mode_from(const std::string& s)
{
  if (s == "M1") return Mode::M1;
  if (s == "M2") return Mode::M2;
  if (s == "M3") return Mode::M3;
  throw SchemaError("unknown failure mode '" + s + "'");
}

std::string to_string(ActionKind k)
{
  for (const auto& [a, n] : kActionNames) {
    if (a == k) return n;
  }
  return "?";
}

json evidence_to_json(const Evidence& e)
{
  return std::visit(
      [](const auto& ev) -> json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, GroundingEvidence>) {
          return {{"kind", "grounding_failure"},
                  {"step", ev.step},
                  {"reason", planner::to_string(ev.reason)},
                  {"name", ev.name},
                  {"from_speech", ev.from_speech}};
        } else if constexpr (std::is_same_v<T, ParseEvidence>) {
          return {{"kind", "parse_failure"}, {"command", ev.command}, {"slot", ev.slot}, {"slot_kind", ev.kind},
                  {"text", ev.text}};
        } else if constexpr (std::is_same_v<T, VerdictEvidence>) {
          return {{"kind", "operator_verdict"}, {"completed", false}, {"feedback", ev.feedback}};
        } else if constexpr (std::is_same_v<T, SkillEvidence>) {
          return {{"kind", "skill_failure"},
                  {"call", json::parse(planner::call_to_json(ev.call).dump())},
                  {"result", ev.result.to_json()}};
        } else {
          return {{"kind", "plan_defects"}, {"report", ev.report.to_json()}};
        }
      },
      e);
}

Mode classify_failure(const Evidence& e)
{
  if (const auto* g = std::get_if<GroundingEvidence>(&e)) {
    switch (g->reason) {
      case GroundingReason::UNKNOWN_OBJECT_LOCATION: return Mode::M1;
      case GroundingReason::UNKNOWN_LOCATION:
      case GroundingReason::UNKNOWN_PERSON: return g->from_speech ? Mode::M2 : Mode::M1;
      case GroundingReason::AMBIGUOUS_STEP: return Mode::M2;
    }
  }
  if (std::holds_alternative<SkillEvidence>(e)) return Mode::M3;
  return Mode::M2;
}

json FailureEvent::to_json() const
{
  return {{"mode", recovery::to_string(mode)}, {"evidence", evidence_to_json(evidence)}};
}

json RecoveryAction::to_json() const { return {{"action", recovery::to_string(kind)}, {"params", params}}; }

RecoveryBudget RecoveryBudget::from_json(const json& j)
{
  RecoveryBudget b;
  b.max_skill_retries = j.value("max_skill_retries", b.max_skill_retries);
  b.max_replans = j.value("max_replans", b.max_replans);
  b.max_operator_queries = j.value("max_operator_queries", b.max_operator_queries);
  b.max_suggestions = j.value("max_suggestions", b.max_suggestions);
  if (b.max_skill_retries < 0 || b.max_replans < 0 || b.max_operator_queries < 0 || b.max_suggestions < 0)
    throw SchemaError("recovery budget values must be >= 0");
  return b;
}

json RecoveryBudget::to_json() const
{
  return {{"max_skill_retries", max_skill_retries},
          {"max_replans", max_replans},
          {"max_operator_queries", max_operator_queries},
          {"max_suggestions", max_suggestions}};
}

bool is_object_search_miss(const SkillEvidence& e)
{
  return (e.call.function == "find_concrete_name_objects" || e.call.function == "find_category_name_objects") &&
         e.result.reason == skills::FailureReason::NOT_FOUND;
}

RecoveryAction recover(const FailureEvent& event, const RecoveryState& s, const RecoveryBudget& b)
{
  switch (event.mode) {
    case Mode::M1: return recover_m1(s, b);
    case Mode::M3: {
      const auto* sk = std::get_if<SkillEvidence>(&event.evidence);
      if (s.retries_for_call < b.max_skill_retries) return act(ActionKind::RETRY_SKILL, {{"retry", s.retries_for_call + 1}});
      if (sk && is_object_search_miss(*sk)) return recover_m1(s, b);
      if (can_replan(s, b)) return act(ActionKind::ALTERNATIVE_STEPS);
      return give_up("skill kept failing and no replans are left");
    }
    case Mode::M2: {
      const bool speech = std::holds_alternative<ParseEvidence>(event.evidence) ||
                          (std::holds_alternative<GroundingEvidence>(event.evidence) &&
                           std::get<GroundingEvidence>(event.evidence).reason != GroundingReason::AMBIGUOUS_STEP);
      if (speech && !s.rephrased) {
        if (can_query(s, b)) return act(ActionKind::ASK_OPERATOR_REPHRASE, {{"about", "command"}});
        return give_up("cannot ask the operator to rephrase again");
      }
      if (!can_replan(s, b)) return give_up("no replans are left");
      if (std::holds_alternative<VerdictEvidence>(event.evidence) && !can_query(s, b))
        return give_up("cannot ask the operator about the object");
      return act(ActionKind::UPDATE_LEDGER_AND_REPLAN);
    }
  }
  return give_up("unhandled failure");
}

std::string render_recovery_prompt(const RecoveryPromptContext& ctx)
{
  if (ctx.task_content.empty() || ctx.failed_action.empty() || ctx.robot_at.empty())
    throw PreconditionError("recovery prompt needs task content, failed action and robot position");
  return "The robot is supposed to " + ctx.task_content + ". The robot tried to " + ctx.failed_action + " " +
         ctx.robot_at + ", but failed. What should the robot do next?";
}

std::string action_phrase(const SkillCall& c)
{
  const auto& f = c.function;
  if (f == "go_to_location") return "go to the " + c.arg("location");
  if (f == "find_person") return "find " + c.arg("person");
  if (f == "find_concrete_name_objects") return "find the " + c.arg("object");
  if (f == "find_category_name_objects") return "find the " + c.arg("category");
  if (f == "pick") return "pick the " + c.arg("object");
  if (f == "place") return "place the " + c.arg("object") + " on the " + c.arg("location");
  if (f == "hand_over") return "hand over the " + c.arg("object") + " to " + c.arg("person");
  if (f == "ask_question") return "ask " + c.arg("person") + " a question";
  if (f == "operate_door") return c.arg("operation") + " the door";
  if (f == "follow_person") return "follow " + c.arg("person");
  if (f == "guide") return "guide " + c.arg("person");
  std::string phrase = f;
  for (auto& ch : phrase) {
    if (ch == '_') ch = ' ';
  }
  return phrase;
}

planner::Plan splice_plan(const planner::Plan& plan, std::size_t at, const std::vector<SkillCall>& replacement,
                          const WorldKnowledge& known)
{
  if (at >= plan.calls.size())
    throw PreconditionError("splice index " + std::to_string(at) + " outside plan of " +
                            std::to_string(plan.calls.size()) + " calls");
  planner::Plan out = plan;
  out.calls.erase(out.calls.begin() + static_cast<std::ptrdiff_t>(at));
  out.calls.insert(out.calls.begin() + static_cast<std::ptrdiff_t>(at), replacement.begin(), replacement.end());
  auto report = planner::validate_plan(out, known);
  if (!report.pass()) {
    std::string msg = "spliced plan does not validate:";
    for (const auto& d : report.defects) msg += " " + planner::to_string(d.code);
    throw SpliceRejected(msg, std::move(report));
  }
  return out;
}

}  // namespace gpsr::recovery
