#include "gpsr/mock_backend.hpp"

#include <algorithm>
#include <regex>

#include "gpsr/grammar.hpp"
#include "gpsr/text.hpp"

namespace gpsr::lm {

using nlohmann::json;

namespace {

BackendResponse success(json result, std::optional<double> confidence = std::nullopt)
{
  BackendResponse r;
  r.raw = result.dump();
  r.result = std::move(result);
  r.confidence = confidence;
  return r;
}

BackendResponse refusal(const std::string& code, const std::string& message, json detail = json::object())
{
  BackendResponse r;
  r.failure = BackendFailure{code, message, std::move(detail)};
  r.raw = json({{"error", code}, {"message", message}}).dump();
  return r;
}

json call(const std::string& function, json args, std::size_t origin)
{
  return {{"function", function}, {"args", std::move(args)}, {"origin", origin}};
}

struct StepRule {
  std::regex pattern;
  std::string name;
};

const std::vector<StepRule>& step_rules()
{
  static const std::vector<StepRule> rules = [] {
    const auto f = std::regex::icase | std::regex::ECMAScript;
    std::vector<StepRule> r;
    auto add = [&](const char* re, const char* name) { r.push_back({std::regex(re, f), name}); };
    add("^move to the location of any (.+)$", "goto_category");
    add("^move to the location of (.+)$", "goto_object");
    add("^(?:move|go|navigate) to (?:the )?(.+)$", "goto");
    add("^find all objects$", "find_all");
    add("^find any (.+)$", "find_category");
    add("^find the person who is (.+)$", "find_pose");
    add("^find (.+)$", "find");
    add("^(?:pick|grasp|grab) (?:up )?(?:the |any )?(.+)$", "pick");
    add("^(?:place|put) (?:the )?(.+) on (?:the )?(.+)$", "place");
    add("^hand over (?:the )?(.+) to (?:the )?(.+)$", "hand_over");
    add("^tell the operator where (.+) is$", "tell_where");
    add("^tell (the operator|\\S+) (.+)$", "tell");
    add("^ask (.+?) to hand over (?:the )?(.+)$", "ask_hand_over");
    add("^ask the location of (.+)$", "ask_location");
    add("^ask (the operator|\\S+) (.+)$", "ask");
    add("^count the people who are (.+)$", "count_pose");
    add("^count the people$", "count_people");
    add("^count (?:the )?(.+)$", "count");
    add("^detect the pose of (.+)$", "pose");
    add("^follow (.+?) to (?:the )?(.+)$", "follow_to");
    add("^follow (.+)$", "follow");
    add("^guide (.+?) to (?:the )?(.+)$", "guide");
    add("^answer the question of (.+)$", "answer");
    add("^(open|close) the door (?:at|of) (?:the )?(.+)$", "door");
    return r;
  }();
  return rules;
}

std::string strip_final_punct(std::string s)
{
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return text::trim(s);
}

}  // namespace

double lcs_ratio(const std::string& a, const std::string& b)
{
  const auto la = text::to_lower(a), lb = text::to_lower(b);
  if (la.empty() && lb.empty()) return 1.0;
  return 2.0 * static_cast<double>(text::lcs_length(la, lb)) / static_cast<double>(la.size() + lb.size());
}

double slot_similarity(const std::string& answer, const std::string& candidate)
{
  const auto a = text::words(answer);
  const auto c = text::words(candidate);
  const auto cand = text::join(c, " ");
  if (a.size() <= c.size()) return lcs_ratio(text::join(a, " "), cand);
  double best = 0.0;
  for (std::size_t i = 0; i + c.size() <= a.size(); ++i) {
    std::vector<std::string> window(a.begin() + i, a.begin() + i + c.size());
    best = std::max(best, lcs_ratio(text::join(window, " "), cand));
  }
  return best;
}

std::optional<SlotMatch> best_slot_match(const std::string& answer, const std::vector<std::string>& candidates,
                                         double threshold)
{
  std::optional<SlotMatch> best;
  for (const auto& c : candidates) {
    const double s = slot_similarity(answer, c);
    if (s <= threshold) continue;
    const bool better = !best || s > best->score ||
                        (s == best->score && (c.size() > best->value.size() ||
                                              (c.size() == best->value.size() && c < best->value)));
    if (better) best = SlotMatch{c, s};
  }
  return best;
}

MockBackend::MockBackend(CommonsenseTable commonsense, double slot_threshold)
    : commonsense_(std::move(commonsense)), slot_threshold_(slot_threshold)
{
}

BackendResponse MockBackend::respond(const BackendRequest& request)
{
  switch (request.kind) {
    case RequestKind::DECOMPOSE: return decompose(request.payload);
    case RequestKind::GROUND: return ground(request.payload);
    case RequestKind::SUGGEST_LOCATIONS: return suggest_locations(request.payload);
    case RequestKind::EXTRACT_SLOT: return extract_slot(request.payload);
    case RequestKind::RECOVERY_STEPS: return recovery_steps(request.payload);
    case RequestKind::ANSWER_QUESTION: return answer_question(request.payload);
  }
  return refusal("UNSUPPORTED", "unsupported request kind");
}

BackendResponse MockBackend::decompose(const json& payload) const
{
  const auto command = payload.value("command", "");
  const auto known = WorldKnowledge::from_json(payload.value("known", json::object()));
  auto outcome = grammar::parse_command(command, known);
  if (auto* fail = std::get_if<grammar::ParseFailure>(&outcome)) {
    return refusal("CANNOT_PARSE", fail->message, {{"slot", fail->slot}, {"kind", fail->kind}, {"text", fail->text}});
  }
  const auto& frame = std::get<grammar::IntentFrame>(outcome);
  return success({{"steps", grammar::steps_for(frame)},
                  {"frame", frame.to_json()},
                  {"task", grammar::task_description(frame)}});
}

BackendResponse MockBackend::ground(const json& payload) const
{
  const auto known = WorldKnowledge::from_json(payload.value("known", json::object()));
  std::string current = payload.value("start", "");
  const auto steps = payload.value("steps", std::vector<std::string>{});

  auto place = [&](const std::string& s) { return known.place(s).value_or(s); };
  auto person = [&](const std::string& s) {
    if (text::to_lower(s) == "the operator") return std::string(world::kOperator);
    return known.person(s).value_or(s);
  };
  auto thing = [](const std::string& s) { return text::to_lower(text::trim(s)); };

  json calls = json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto sentence = strip_final_punct(steps[i]);
    std::smatch m;
    const StepRule* rule = nullptr;
    for (const auto& r : step_rules()) {
      if (std::regex_match(sentence, m, r.pattern)) {
        rule = &r;
        break;
      }
    }
    if (!rule) {
      return refusal("AMBIGUOUS_STEP", "cannot map step to a skill: \"" + steps[i] + "\"",
                     {{"step", i}, {"sentence", steps[i]}});
    }
    const auto& n = rule->name;
    const std::string a1 = m.size() > 1 ? m[1].str() : "";
    const std::string a2 = m.size() > 2 ? m[2].str() : "";

    if (n == "goto_category" || n == "goto_object") {
      std::optional<std::string> loc;
      if (n == "goto_category") {
        if (auto obj = known.object_of_category(thing(a1))) loc = known.location_of(*obj);
      } else {
        loc = known.location_of(thing(a1));
      }
      if (!loc) {
        return refusal("UNKNOWN_OBJECT_LOCATION", "no known location for '" + thing(a1) + "'",
                       {{"step", i}, {"sentence", steps[i]}, {"object", thing(a1)},
                        {"category", n == "goto_category"}});
      }
      current = *loc;
      calls.push_back(call("go_to_location", {{"location", current}}, i));
    } else if (n == "goto") {
      current = text::to_lower(a1) == "operator" ? std::string(world::kOperator) : place(a1);
      calls.push_back(call("go_to_location", {{"location", current}}, i));
    } else if (n == "find_all") {
      calls.push_back(call("find_category_name_objects", {{"category", "objects"}}, i));
    } else if (n == "find_category") {
      calls.push_back(call("find_category_name_objects", {{"category", thing(a1)}}, i));
    } else if (n == "find_pose") {
      calls.push_back(call("find_specific_pose_person", {{"person", "person"}, {"pose", thing(a1)}}, i));
    } else if (n == "find") {
      if (auto p = known.person(a1)) calls.push_back(call("find_person", {{"person", *p}}, i));
      else calls.push_back(call("find_concrete_name_objects", {{"object", thing(a1)}}, i));
    } else if (n == "pick") {
      calls.push_back(call("pick", {{"object", thing(a1)}, {"location", current}}, i));
    } else if (n == "place") {
      current = place(a2);
      calls.push_back(call("place", {{"object", thing(a1)}, {"location", current}}, i));
    } else if (n == "hand_over") {
      calls.push_back(call("hand_over", {{"object", thing(a1)}, {"person", person(a2)}}, i));
    } else if (n == "tell_where") {
      calls.push_back(call("tell_information", {{"information", "where the " + thing(a1) + " is"}, {"person", world::kOperator}}, i));
    } else if (n == "tell") {
      calls.push_back(call("tell_information", {{"information", text::trim(a2)}, {"person", person(a1)}}, i));
    } else if (n == "ask_hand_over") {
      calls.push_back(call("ask_person_to_hand_over",
                           {{"object", thing(a2)}, {"person", person(a1)},
                            {"query", "Could you hand over the " + thing(a2) + " to me?"}},
                           i));
    } else if (n == "ask_location") {
      calls.push_back(call("ask_location", {{"object", thing(a1)}}, i));
    } else if (n == "ask") {
      calls.push_back(call("ask_question", {{"person", person(a1)}, {"question", text::trim(a2)}}, i));
    } else if (n == "count_pose") {
      calls.push_back(call("count_specific_pose_person", {{"person", "people"}, {"pose", thing(a1)}}, i));
    } else if (n == "count_people") {
      calls.push_back(call("count_person", json::object(), i));
    } else if (n == "count") {
      if (auto c = known.category(a1)) calls.push_back(call("count_category_name_objects", {{"category", *c}}, i));
      else calls.push_back(call("count_concrete_name_objects", {{"objects", thing(a1)}}, i));
    } else if (n == "pose") {
      calls.push_back(call("detect_person_pose", {{"person", person(a1)}}, i));
    } else if (n == "follow_to") {
      current = place(a2);
      calls.push_back(call("follow_person", {{"person", person(a1)}, {"location", current}}, i));
    } else if (n == "follow") {
      calls.push_back(call("follow_person", {{"person", person(a1)}}, i));
    } else if (n == "guide") {
      current = place(a2);
      calls.push_back(call("guide", {{"person", person(a1)}, {"location", current}}, i));
    } else if (n == "answer") {
      calls.push_back(call("answer_question", {{"person", person(a1)}}, i));
    } else if (n == "door") {
      current = place(a2);
      calls.push_back(call("operate_door", {{"location", current}, {"operation", thing(a1)}}, i));
    }
  }
  return success({{"calls", calls}});
}

BackendResponse MockBackend::suggest_locations(const json& payload) const
{
  const auto object = text::to_lower(payload.value("object", ""));
  std::string category = text::to_lower(payload.value("category", ""));
  if (category.empty()) {
    if (auto it = commonsense_.object_categories.find(object); it != commonsense_.object_categories.end())
      category = it->second;
    else
      category = object;
  }
  const auto places = payload.value("places", std::vector<std::string>{});
  json out = json::array();
  if (auto it = commonsense_.category_rooms.find(category); it != commonsense_.category_rooms.end()) {
    for (const auto& room : it->second) {
      for (const auto& p : places) {
        if (text::to_lower(p) == text::to_lower(room)) {
          out.push_back(p);
          break;
        }
      }
    }
  }
  return success({{"locations", out}, {"category", category}});
}

BackendResponse MockBackend::extract_slot(const json& payload) const
{
  const auto answer = payload.value("answer", "");
  const auto candidates = payload.value("candidates", std::vector<std::string>{});
  auto match = best_slot_match(answer, candidates, slot_threshold_);
  if (!match) return refusal("NO_MATCH", "no known " + payload.value("kind", std::string("name")) + " in answer");
  return success({{"value", match->value}}, match->score);
}

BackendResponse MockBackend::recovery_steps(const json& payload) const
{
  const auto failed = payload.value("failed_call", json::object());
  const auto function = failed.value("function", "");
  const auto args = failed.value("args", std::map<std::string, std::string>{});
  const auto attempt = payload.value("attempt", std::size_t{0});
  auto arg = [&](const char* k) {
    auto it = args.find(k);
    return it == args.end() ? std::string() : it->second;
  };

  std::vector<std::string> rooms;
  if (auto r = payload.value("robot_room", std::string()); !r.empty()) rooms.push_back(r);
  auto adjacent = payload.value("adjacent_rooms", std::vector<std::string>{});
  std::sort(adjacent.begin(), adjacent.end());
  for (const auto& r : adjacent) {
    if (std::find(rooms.begin(), rooms.end(), r) == rooms.end()) rooms.push_back(r);
  }

  std::vector<std::string> steps;
  if (function == "find_person" || function == "find_concrete_name_objects" ||
      function == "find_category_name_objects") {
    if (attempt < rooms.size()) {
      steps.push_back("Move to the " + rooms[attempt]);
      if (function == "find_person") steps.push_back("Find " + arg("person"));
      else if (function == "find_concrete_name_objects") steps.push_back("Find " + arg("object"));
      else steps.push_back("Find any " + arg("category"));
    }
  } else if (attempt == 0) {
    if (function == "go_to_location") {
      if (auto r = payload.value("location_room", std::string()); !r.empty() && r != arg("location"))
        steps.push_back("Move to the " + r);
      steps.push_back("Move to the " + arg("location"));
    } else if (function == "pick") {
      steps = {"Find " + arg("object"), "Pick " + arg("object")};
    } else if (function == "place") {
      steps = {"Move to the " + arg("location"), "Place " + arg("object") + " on the " + arg("location")};
    } else if (function == "operate_door") {
      steps = {"Move to the " + arg("location"), (arg("operation") == "close" ? std::string("Close") : std::string("Open")) + " the door at the " + arg("location")};
    } else if (function == "ask_question") {
      steps = {"Find " + arg("person"), "Ask " + arg("person") + " " + arg("question")};
    }
  }
  return success({{"steps", steps}});
}

BackendResponse MockBackend::answer_question(const json& payload) const
{
  const auto question = payload.value("question", "");
  const auto facts = payload.value("facts", std::vector<std::string>{});
  const auto q = text::content_tags(question);
  std::string best;
  double best_score = 0.0;
  for (const auto& f : facts) {
    const double s = text::jaccard(q, text::content_tags(f));
    if (s > best_score) {
      best_score = s;
      best = f;
    }
  }
  if (best.empty()) return success({{"answer", "I don't know."}}, 0.0);
  return success({{"answer", best}}, best_score);
}

}  // namespace gpsr::lm
