#include "gpsr/planner.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "gpsr/skill_registry.hpp"
#include "gpsr/text.hpp"
#include "gpsr/world.hpp"

namespace gpsr::planner {

using nlohmann::json;

lm::BackendResponse exchange(const BackendLink& link, const PromptLedger& ledger, lm::RequestKind kind,
                             const json& payload)
{
  lm::BackendRequest req{kind, lm::render_prompt(ledger, kind, payload), payload};
  auto resp = link.backend.respond(req);
  if (link.observer) link.observer(req, resp);
  if (resp.ok()) lm::check_result_shape(kind, resp.result);
  return resp;
}

DecomposeOutcome decompose(const std::string& command, const PromptLedger& ledger, const BackendLink& link,
                           const WorldKnowledge& known)
{
  if (text::trim(command).empty()) throw PreconditionError("decompose: empty command");
  const auto resp = exchange(link, ledger, lm::RequestKind::DECOMPOSE, {{"command", command}, {"known", known.to_json()}});
  if (!resp.ok()) {
    const auto& d = resp.failure->detail;
    return CannotParse{resp.failure->message, d.value("slot", ""), d.value("kind", ""), d.value("text", command)};
  }
  Decomposition out;
  out.steps = make_steps(resp.result.at("steps").get<std::vector<std::string>>());
  out.frame = resp.result.value("frame", json());
  out.task = resp.result.value("task", text::trim(command));
  return out;
}

std::string to_string(GroundingReason r)
{
  switch (r) {
    case GroundingReason::AMBIGUOUS_STEP: return "AMBIGUOUS_STEP";
    case GroundingReason::UNKNOWN_LOCATION: return "UNKNOWN_LOCATION";
    case GroundingReason::UNKNOWN_PERSON: return "UNKNOWN_PERSON";
    case GroundingReason::UNKNOWN_OBJECT_LOCATION: return "UNKNOWN_OBJECT_LOCATION";
  }
  return "?";
}

std::string to_string(DefectCode c)
{
  switch (c) {
    case DefectCode::FIND_BEFORE_NAV: return "FIND_BEFORE_NAV";
    case DefectCode::GRASP_BEFORE_FIND: return "GRASP_BEFORE_FIND";
    case DefectCode::GRASP_WHILE_HOLDING: return "GRASP_WHILE_HOLDING";
    case DefectCode::PLACE_WITHOUT_HOLDING: return "PLACE_WITHOUT_HOLDING";
    case DefectCode::UNKNOWN_LOCATION: return "UNKNOWN_LOCATION";
    case DefectCode::UNKNOWN_SKILL: return "UNKNOWN_SKILL";
    case DefectCode::AMBIGUOUS_STEP: return "AMBIGUOUS_STEP";
  }
  return "?";
}

bool is_location_arg(const std::string& function, const std::string& arg)
{
  if (arg == "location") return function != "ask_location";
  if (arg == "room") return function == "find_concrete_name_objects" || function == "find_category_name_objects";
  return false;
}

bool is_person_arg(const std::string& function, const std::string& arg)
{
  if (arg != "person") return false;
  return function != "find_specific_pose_person" && function != "count_specific_pose_person";
}

namespace {

bool known_place(const WorldKnowledge& known, const std::string& name)
{
  return name == world::kOperator || known.place(name).has_value();
}

// GROUND without the name checks: structured failures from the backend are mapped to
// grounding reasons, calls with a bad signature count as ambiguous.
GroundOutcome ground_raw(const std::vector<PlanStep>& steps, const PromptLedger& ledger, const BackendLink& link,
                         const WorldKnowledge& known, const std::optional<std::string>& start,
                         const std::string& source_command)
{
  if (steps.empty()) throw PreconditionError("ground: no steps");
  json payload = {{"known", known.to_json()}};
  json sentences = json::array();
  for (const auto& s : steps) sentences.push_back(s.text);
  payload["steps"] = sentences;
  if (start) payload["start"] = *start;

  const auto resp = exchange(link, ledger, lm::RequestKind::GROUND, payload);
  if (!resp.ok()) {
    const auto& d = resp.failure->detail;
    GroundingFailure f;
    f.step = d.value("step", std::size_t{0});
    f.message = resp.failure->message;
    if (resp.failure->code == "UNKNOWN_OBJECT_LOCATION") {
      f.reason = GroundingReason::UNKNOWN_OBJECT_LOCATION;
      f.name = d.value("object", "");
      f.category = d.value("category", false);
    } else {
      f.reason = GroundingReason::AMBIGUOUS_STEP;
      f.name = f.step < steps.size() ? steps[f.step].text : d.value("sentence", "");
    }
    return f;
  }

  Plan plan;
  plan.source_command = source_command;
  plan.ledger_version = ledger.version;
  std::set<std::size_t> covered;
  for (const auto& c : resp.result.at("calls")) {
    SkillCall call;
    call.function = c.at("function").get<std::string>();
    call.args = c.value("args", std::map<std::string, std::string>{});
    call.origin = c.value("origin", std::size_t{0});
    if (call.origin >= steps.size()) throw lm::MalformedCompletion("GROUND: call origin out of range");
    if (auto err = skills::signature_error(call.function, call.args)) {
      return GroundingFailure{call.origin, GroundingReason::AMBIGUOUS_STEP, steps[call.origin].text, *err, false};
    }
    covered.insert(call.origin);
    plan.calls.push_back(std::move(call));
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!covered.count(i))
      return GroundingFailure{i, GroundingReason::AMBIGUOUS_STEP, steps[i].text, "step produced no skill call", false};
  }
  return plan;
}

}  // namespace

GroundOutcome ground(const std::vector<PlanStep>& steps, const PromptLedger& ledger, const BackendLink& link,
                     const WorldKnowledge& known, const std::optional<std::string>& start,
                     const std::string& source_command)
{
  auto outcome = ground_raw(steps, ledger, link, known, start, source_command);
  if (std::holds_alternative<GroundingFailure>(outcome)) return outcome;
  const auto& plan = std::get<Plan>(outcome);
  for (const auto& c : plan.calls) {
    for (const auto& [arg, value] : c.args) {
      if (is_location_arg(c.function, arg) && !known_place(known, value)) {
        return GroundingFailure{c.origin, GroundingReason::UNKNOWN_LOCATION, value,
                                "unknown location '" + value + "' in " + describe(c), false};
      }
      if (is_person_arg(c.function, arg) && !known.person(value)) {
        return GroundingFailure{c.origin, GroundingReason::UNKNOWN_PERSON, value,
                                "unknown person '" + value + "' in " + describe(c), false};
      }
    }
  }
  return outcome;
}

json ValidationReport::to_json() const
{
  json d = json::array();
  for (const auto& x : defects) d.push_back({{"code", planner::to_string(x.code)}, {"index", x.index}, {"message", x.message}});
  return {{"verdict", pass() ? "pass" : "fail"}, {"defects", d}};
}

ValidationReport validate_plan(const Plan& plan, const WorldKnowledge& known)
{
  ValidationReport report;
  std::optional<std::string> at;
  std::optional<std::string> holding;
  std::map<std::string, std::string> found;  // object or category -> location where it was found

  auto defect = [&](DefectCode code, std::size_t i, const std::string& msg) { report.defects.push_back({code, i, msg}); };
  auto check_place = [&](std::size_t i, const std::string& name) {
    if (!known_place(known, name)) {
      defect(DefectCode::UNKNOWN_LOCATION, i, "unknown location '" + name + "'");
      return false;
    }
    return true;
  };

  for (std::size_t i = 0; i < plan.calls.size(); ++i) {
    const auto& c = plan.calls[i];
    const auto& f = c.function;
    if (!skills::find_skill(f)) {
      defect(DefectCode::UNKNOWN_SKILL, i, "no skill named '" + f + "'");
      continue;
    }
    if (f == "go_to_location") {
      check_place(i, c.arg("location"));
      at = c.arg("location");
    } else if (f == "find_concrete_name_objects" || f == "find_category_name_objects") {
      const auto what = f == "find_concrete_name_objects" ? c.arg("object") : c.arg("category");
      const auto room = c.arg("room");
      if (!room.empty() && !check_place(i, room)) continue;
      if (!at) {
        defect(DefectCode::FIND_BEFORE_NAV, i, "looks for '" + what + "' before moving anywhere");
      } else if (!room.empty() && known.room_of(*at) != known.room_of(room)) {
        defect(DefectCode::FIND_BEFORE_NAV, i, "looks for '" + what + "' in the " + room + " while at the " + *at);
      } else {
        found[what] = *at;
      }
    } else if (f == "pick") {
      const auto obj = c.arg("object");
      const auto loc = c.arg("location");
      if (!check_place(i, loc)) continue;
      if (holding) {
        defect(DefectCode::GRASP_WHILE_HOLDING, i, "picks '" + obj + "' while still holding '" + *holding + "'");
      } else {
        auto it = found.find(obj);
        if (!at || *at != loc || it == found.end() || it->second != loc)
          defect(DefectCode::GRASP_BEFORE_FIND, i, "picks '" + obj + "' at the " + loc + " before finding it there");
      }
      holding = obj;
    } else if (f == "place" || f == "hand_over") {
      if (f == "place" && !check_place(i, c.arg("location"))) continue;
      if (!holding) {
        defect(DefectCode::PLACE_WITHOUT_HOLDING, i, f + " of '" + c.arg("object") + "' with an empty gripper");
      }
      holding.reset();
      if (f == "place") at = c.arg("location");
    } else if (f == "ask_person_to_hand_over") {
      if (holding) {
        defect(DefectCode::GRASP_WHILE_HOLDING, i,
               "receives '" + c.arg("object") + "' while still holding '" + *holding + "'");
      }
      holding = c.arg("object");
    } else if (f == "guide" || f == "follow_person") {
      const auto loc = c.arg("location");
      if (!loc.empty()) {
        if (check_place(i, loc)) at = loc;
      }
    } else if (f == "operate_door") {
      check_place(i, c.arg("location"));
    }
  }
  return report;
}

ValidationReport validate_steps(const std::vector<std::string>& steps, const PromptLedger& ledger,
                                const BackendLink& link, const WorldKnowledge& known)
{
  ValidationReport report;
  std::vector<std::size_t> index;  // position in the remaining list -> original step index
  std::vector<PlanStep> remaining;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    index.push_back(i);
    remaining.push_back({steps[i], i});
  }
  std::vector<Defect> step_defects;
  while (!remaining.empty()) {
    auto outcome = ground_raw(remaining, ledger, link, known, std::nullopt, "");
    if (auto* plan = std::get_if<Plan>(&outcome)) {
      auto r = validate_plan(*plan, known);
      report.defects = std::move(r.defects);
      break;
    }
    const auto& fail = std::get<GroundingFailure>(outcome);
    const auto pos = std::min(fail.step, remaining.size() - 1);
    const auto code = fail.reason == GroundingReason::AMBIGUOUS_STEP ? DefectCode::AMBIGUOUS_STEP
                                                                     : DefectCode::UNKNOWN_LOCATION;
    step_defects.push_back({code, index[pos], "step " + std::to_string(index[pos]) + ": " + fail.message});
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
    index.erase(index.begin() + static_cast<std::ptrdiff_t>(pos));
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i].index = i;
  }
  report.defects.insert(report.defects.end(), step_defects.begin(), step_defects.end());
  return report;
}

}  // namespace gpsr::planner
