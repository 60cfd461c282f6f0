#include "gpsr/skills.hpp"

#include <algorithm>

#include "gpsr/skill_registry.hpp"
#include "gpsr/text.hpp"

namespace gpsr::skills {

using nlohmann::json;
using planner::SkillCall;

namespace {

constexpr std::pair<FailureReason, const char*> kReasonNames[] = {
    {FailureReason::NOT_FOUND, "NOT_FOUND"},       {FailureReason::NO_RESPONSE, "NO_RESPONSE"},
    {FailureReason::GRASP_FAILED, "GRASP_FAILED"}, {FailureReason::NAV_FAILED, "NAV_FAILED"},
    {FailureReason::DOOR_STUCK, "DOOR_STUCK"},     {FailureReason::PRECONDITION, "PRECONDITION"},
    {FailureReason::INJECTED, "INJECTED"},
};

constexpr std::pair<InjectionBehavior, const char*> kBehaviorNames[] = {
    {InjectionBehavior::fail_once, "fail_once"},
    {InjectionBehavior::fail_n, "fail_n"},
    {InjectionBehavior::fail_always, "fail_always"},
};

SkillResult fail(FailureReason reason, std::string message, json observations = json::object())
{
  SkillResult r;
  r.success = false;
  r.reason = reason;
  r.message = std::move(message);
  r.observations = std::move(observations);
  return r;
}

SkillResult ok(json observations = json::object(), std::vector<world::Effect> effects = {})
{
  SkillResult r;
  r.observations = std::move(observations);
  r.effects = std::move(effects);
  return r;
}

bool same(const std::string& a, const std::string& b) { return text::to_lower(a) == text::to_lower(b); }

std::string robot_room(const Context& ctx) { return ctx.world.robot_room(); }

// Canonical name of a person the robot can currently see, or nullopt.
std::optional<std::string> visible_person(const Context& ctx, const std::string& name)
{
  const auto* p = ctx.world.find_person(name);
  if (!p) return std::nullopt;
  if (p->name == world::kOperator) {
    if (same(p->room, robot_room(ctx))) return p->name;
    return std::nullopt;
  }
  for (const auto& [n, pose] : perception::perceive_persons(ctx.world, robot_room(ctx), {}, ctx.noise)) {
    if (n == p->name) return n;
  }
  return std::nullopt;
}

std::string place_of(const world::ObjectEntity& o)
{
  switch (o.place.kind) {
    case world::Place::Kind::location: return o.place.ref;
    case world::Place::Kind::person: return o.place.ref;
    case world::Place::Kind::robot: return "robot";
  }
  return {};
}

// Where to look: the given room (must be the robot's), else the robot's location or room.
std::optional<std::string> search_area(const Context& ctx, const SkillCall& call, std::string& error)
{
  const auto room = call.arg("room");
  if (!room.empty()) {
    const auto* r = ctx.world.find_room(room);
    if (!r) {
      error = "unknown room '" + room + "'";
      return std::nullopt;
    }
    if (!same(r->name, robot_room(ctx))) {
      error = "robot is in the " + robot_room(ctx) + ", not the " + r->name;
      return std::nullopt;
    }
    return r->name;
  }
  return ctx.world.robot.at;
}

std::vector<perception::PromptEntry> entries_for(const Context& ctx, const std::string& label)
{
  std::vector<perception::PromptEntry> entries;
  entries.push_back(perception::PromptEntry::make(label, "a photo of a " + label));
  entries.insert(entries.end(), ctx.ledger.perception_entries.begin(), ctx.ledger.perception_entries.end());
  return perception::effective_entries(entries);
}

SkillResult go_to_location(Context& ctx, const SkillCall& c)
{
  auto target = c.arg("location");
  if (target == world::kOperator) {
    const auto* op = ctx.world.find_person(world::kOperator);
    if (!op) return fail(FailureReason::NAV_FAILED, "no operator in this world");
    return ok({{"at", op->room}, {"reached", world::kOperator}}, {world::MoveRobot{op->room}});
  }
  if (!ctx.world.is_room(target) && !ctx.world.is_location(target))
    return fail(FailureReason::NAV_FAILED, "no such place '" + target + "'");
  const auto canonical = ctx.world.is_room(target) ? ctx.world.find_room(target)->name : ctx.world.find_location(target)->name;
  return ok({{"at", canonical}}, {world::MoveRobot{canonical}});
}

SkillResult find_concrete(Context& ctx, const SkillCall& c)
{
  const auto label = text::to_lower(c.arg("object"));
  std::string err;
  auto area = search_area(ctx, c, err);
  if (!area) return fail(FailureReason::PRECONDITION, err);
  const auto entries = entries_for(ctx, label);
  const auto detections =
      perception::detect_objects(ctx.world, *area, perception::OpenVocabulary{entries}, ctx.noise, ctx.detector);

  const perception::Detection* best = nullptr;
  double best_score = -1.0;
  json seen = json::array();
  for (const auto& d : detections) {
    const auto cls = perception::classify_detection(d, entries);
    seen.push_back({{"entity", d.entity_ref}, {"label", cls.label}, {"score", cls.score}});
    if (!same(cls.label, label)) continue;
    if (cls.score > best_score) {
      best = &d;
      best_score = cls.score;
    }
  }
  if (!best) return fail(FailureReason::NOT_FOUND, "no " + label + " at the " + *area, {{"area", *area}, {"detections", seen}});
  const auto* o = ctx.world.find_object(best->entity_ref);
  ctx.bindings[label] = o->name;
  ctx.facts.push_back("The " + label + " is on the " + place_of(*o) + ".");
  return ok({{"area", *area}, {"entity", o->name}, {"label", label}, {"score", best_score},
             {"location", place_of(*o)}, {"detections", seen}});
}

SkillResult find_category(Context& ctx, const SkillCall& c)
{
  const auto category = text::to_lower(c.arg("category"));
  std::string err;
  auto area = search_area(ctx, c, err);
  if (!area) return fail(FailureReason::PRECONDITION, err);

  const bool all = category == "objects" || category == "object";
  perception::ClosedVocabulary vocab;
  if (all) {
    for (const auto& o : ctx.world.objects) vocab.classes.insert(o.category);
  } else {
    for (const auto& o : ctx.world.objects) {
      if (same(o.category, category)) vocab.classes.insert(o.category);
    }
  }
  std::vector<perception::Detection> detections;
  if (!vocab.classes.empty())
    detections = perception::detect_objects(ctx.world, *area, vocab, ctx.noise, ctx.detector);

  json found = json::array();
  std::vector<std::string> names;
  for (const auto& d : detections) {
    const auto* o = ctx.world.find_object(d.entity_ref);
    found.push_back({{"entity", o->name}, {"category", o->category}, {"location", place_of(*o)}});
    names.push_back(o->name);
  }
  if (all) {
    ctx.facts.push_back("The objects on the " + *area + " are: " + (names.empty() ? "nothing" : text::join(names, ", ")) + ".");
    return ok({{"area", *area}, {"found", found}, {"count", names.size()}});
  }
  if (names.empty()) return fail(FailureReason::NOT_FOUND, "no " + category + " at the " + *area, {{"area", *area}});
  const auto* first = ctx.world.find_object(names.front());
  ctx.bindings[category] = first->name;
  ctx.facts.push_back("The " + category + " on the " + place_of(*first) + " is the " + first->name + ".");
  return ok({{"area", *area}, {"found", found}, {"entity", first->name}, {"location", place_of(*first)},
             {"count", names.size()}});
}

SkillResult count_objects(Context& ctx, const std::string& query)
{
  const auto room = robot_room(ctx);
  std::size_t n = 0;
  for (const auto& m : world::locate_entity(ctx.world, query, room)) {
    if (m.kind == world::EntityMatch::Kind::object) ++n;
  }
  ctx.facts.push_back("The number of " + query + " in the " + room + " is " + std::to_string(n) + ".");
  return ok({{"room", room}, {"query", query}, {"count", n}});
}

SkillResult find_person(Context& ctx, const SkillCall& c)
{
  const auto name = c.arg("person");
  auto p = visible_person(ctx, name);
  if (!p) return fail(FailureReason::NOT_FOUND, name + " is not visible in the " + robot_room(ctx), {{"room", robot_room(ctx)}});
  const auto* person = ctx.world.find_person(*p);
  return ok({{"person", *p}, {"room", person->room}, {"pose", world::to_string(person->pose)}});
}

SkillResult detect_pose(Context& ctx, const SkillCall& c)
{
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not visible");
  const auto pose = world::to_string(ctx.world.find_person(*p)->pose);
  ctx.facts.push_back("The pose of " + *p + " is " + pose + ".");
  return ok({{"person", *p}, {"pose", pose}});
}

std::vector<std::pair<std::string, world::Pose>> people_with_pose(Context& ctx, const std::string& pose_text,
                                                                  std::string& err)
{
  auto pose = world::try_pose_from(pose_text);
  if (!pose) {
    err = "unknown pose '" + pose_text + "'";
    return {};
  }
  perception::PersonFilter filter;
  filter.pose = *pose;
  return perception::perceive_persons(ctx.world, robot_room(ctx), filter, ctx.noise);
}

SkillResult find_pose_person(Context& ctx, const SkillCall& c)
{
  std::string err;
  auto people = people_with_pose(ctx, c.arg("pose"), err);
  if (!err.empty()) return fail(FailureReason::PRECONDITION, err);
  if (people.empty()) return fail(FailureReason::NOT_FOUND, "nobody is " + c.arg("pose") + " here");
  ctx.bindings[text::to_lower(c.arg("person"))] = people.front().first;
  return ok({{"person", people.front().first}, {"pose", world::to_string(people.front().second)}});
}

SkillResult count_pose_person(Context& ctx, const SkillCall& c)
{
  std::string err;
  auto people = people_with_pose(ctx, c.arg("pose"), err);
  if (!err.empty()) return fail(FailureReason::PRECONDITION, err);
  ctx.facts.push_back("The number of people who are " + c.arg("pose") + " in the " + robot_room(ctx) + " is " +
                      std::to_string(people.size()) + ".");
  return ok({{"room", robot_room(ctx)}, {"count", people.size()}});
}

SkillResult count_person(Context& ctx)
{
  const auto people = perception::perceive_persons(ctx.world, robot_room(ctx), {}, ctx.noise);
  ctx.facts.push_back("The number of people in the " + robot_room(ctx) + " is " + std::to_string(people.size()) + ".");
  return ok({{"room", robot_room(ctx)}, {"count", people.size()}});
}

SkillResult escort(Context& ctx, const SkillCall& c, bool robot_leads)
{
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not visible");
  const auto target = c.arg("location");
  if (target.empty()) {
    if (robot_leads) return fail(FailureReason::PRECONDITION, "guide needs a destination");
    const auto room = ctx.world.find_person(*p)->room;
    return ok({{"person", *p}, {"at", room}}, {world::MoveRobot{room}});
  }
  const auto room = ctx.world.room_of(target);
  if (room.empty()) return fail(FailureReason::NAV_FAILED, "no such place '" + target + "'");
  return ok({{"person", *p}, {"at", room}}, {world::MovePerson{*p, room}, world::MoveRobot{room}});
}

// The entity a plan label refers to: the last thing found under that label, else the name.
const world::ObjectEntity* resolve_object(const Context& ctx, const std::string& label)
{
  if (auto it = ctx.bindings.find(text::to_lower(label)); it != ctx.bindings.end()) {
    if (const auto* o = ctx.world.find_object(it->second)) return o;
  }
  return ctx.world.find_object(label);
}

SkillResult pick(Context& ctx, const SkillCall& c)
{
  const auto loc = c.arg("location");
  if (!same(ctx.world.robot.at, loc)) return fail(FailureReason::PRECONDITION, "robot is not at the " + loc);
  if (ctx.world.robot.holding) return fail(FailureReason::PRECONDITION, "gripper already holds " + *ctx.world.robot.holding);
  const auto* o = resolve_object(ctx, c.arg("object"));
  if (!o || o->place.kind != world::Place::Kind::location || !same(o->place.ref, loc))
    return fail(FailureReason::GRASP_FAILED, "no " + c.arg("object") + " to grasp at the " + loc);
  return ok({{"object", o->name}, {"from", loc}}, {world::Grasp{o->name}});
}

SkillResult place(Context& ctx, const SkillCall& c)
{
  if (!ctx.world.robot.holding) return fail(FailureReason::PRECONDITION, "gripper is empty");
  const auto loc = c.arg("location");
  if (!same(ctx.world.robot.at, loc)) return fail(FailureReason::PRECONDITION, "robot is not at the " + loc);
  const auto* l = ctx.world.find_location(loc);
  if (!l) return fail(FailureReason::PRECONDITION, "'" + loc + "' is not a location");
  return ok({{"object", *ctx.world.robot.holding}, {"location", l->name}}, {world::ReleaseTo{l->name}});
}

SkillResult hand_over(Context& ctx, const SkillCall& c)
{
  if (!ctx.world.robot.holding) return fail(FailureReason::PRECONDITION, "gripper is empty");
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not here");
  return ok({{"object", *ctx.world.robot.holding}, {"person", *p}}, {world::TransferToPerson{*p}});
}

SkillResult ask_hand_over(Context& ctx, const SkillCall& c)
{
  if (ctx.world.robot.holding) return fail(FailureReason::PRECONDITION, "gripper already holds " + *ctx.world.robot.holding);
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not here");
  const auto turn = ask(ctx, *p, c.arg("query"));
  if (turn.no_response()) return fail(FailureReason::NO_RESPONSE, *p + " did not respond");
  const auto* o = ctx.world.find_object(c.arg("object"));
  if (!o || o->place.kind != world::Place::Kind::person || o->place.ref != *p)
    return fail(FailureReason::NOT_FOUND, *p + " does not have the " + c.arg("object"), {{"answer", *turn.corrected_text}});
  return ok({{"object", o->name}, {"person", *p}, {"answer", *turn.corrected_text}}, {world::Grasp{o->name}});
}

SkillResult ask_question(Context& ctx, const SkillCall& c)
{
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not here");
  const auto turn = ask(ctx, *p, c.arg("question"));
  if (turn.no_response()) return fail(FailureReason::NO_RESPONSE, *p + " did not respond");
  ctx.facts.push_back(*p + " answered: " + *turn.corrected_text);
  return ok({{"person", *p}, {"answer", *turn.corrected_text}});
}

std::string compose_answer(Context& ctx, const std::string& question)
{
  std::vector<std::string> facts = ctx.ledger.environment_facts;
  facts.insert(facts.end(), ctx.facts.begin(), ctx.facts.end());
  const auto resp = planner::exchange(ctx.link, ctx.ledger, lm::RequestKind::ANSWER_QUESTION,
                                      {{"question", question}, {"facts", facts}});
  if (!resp.ok()) return "I don't know.";
  return resp.result.at("answer").get<std::string>();
}

SkillResult answer_question(Context& ctx, const SkillCall& c)
{
  const auto who = c.arg("person").empty() ? std::string(world::kOperator) : c.arg("person");
  auto p = visible_person(ctx, who);
  if (!p) return fail(FailureReason::NOT_FOUND, who + " is not here");
  const auto turn = ask(ctx, *p, "What is your question?");
  if (turn.no_response()) return fail(FailureReason::NO_RESPONSE, *p + " did not ask anything");
  const auto answer = compose_answer(ctx, *turn.corrected_text);
  say(ctx, answer, *p);
  return ok({{"person", *p}, {"question", *turn.corrected_text}, {"answer", answer}});
}

SkillResult tell_information(Context& ctx, const SkillCall& c)
{
  auto p = visible_person(ctx, c.arg("person"));
  if (!p) return fail(FailureReason::NOT_FOUND, c.arg("person") + " is not here");
  const auto answer = compose_answer(ctx, c.arg("information"));
  say(ctx, answer, *p);
  return ok({{"person", *p}, {"said", answer}});
}

SkillResult operate_door(Context& ctx, const SkillCall& c)
{
  const auto* l = ctx.world.find_location(c.arg("location"));
  if (!l || l->kind != world::LocationKind::door) return fail(FailureReason::PRECONDITION, "'" + c.arg("location") + "' is not a door");
  if (!same(ctx.world.robot.at, l->name)) return fail(FailureReason::PRECONDITION, "robot is not at the " + l->name);
  const auto op = text::to_lower(c.arg("operation"));
  if (op != "open" && op != "close") return fail(FailureReason::PRECONDITION, "operation must be open or close");
  const auto state = op == "open" ? world::DoorState::open : world::DoorState::closed;
  return ok({{"location", l->name}, {"state", world::to_string(state)}}, {world::SetDoor{l->name, state}});
}

SkillResult ask_location(Context& ctx, const SkillCall& c)
{
  const auto object = text::to_lower(c.arg("object"));
  json obs = {{"object", object}};

  std::optional<std::string> askee;
  if (ctx.hint_person && ctx.world.find_person(*ctx.hint_person)) {
    askee = ctx.world.find_person(*ctx.hint_person)->name;
  } else {
    for (const auto& [n, pose] : perception::perceive_persons(ctx.world, robot_room(ctx), {}, ctx.noise)) {
      if (ctx.world.find_person(n)->responsive) {
        askee = n;
        break;
      }
    }
  }
  const auto places = ctx.knowledge.place_names();
  if (askee) {
    obs["asked"] = *askee;
    const auto turn = ask(ctx, *askee, "Do you know where the " + object + " is?");
    obs["answer"] = turn.no_response() ? json("NO_RESPONSE") : json(*turn.corrected_text);
    if (!turn.no_response()) {
      if (auto loc = dialogue::extract_slot(*turn.corrected_text, "location", places, ctx.ledger, ctx.link)) {
        obs["location"] = *loc;
        obs["source"] = "person";
        return ok(obs);
      }
    }
  }

  json payload = {{"object", object}, {"places", ctx.knowledge.rooms}};
  if (auto cat = ctx.knowledge.category_of(object)) payload["category"] = *cat;
  else if (ctx.knowledge.category(object)) payload["category"] = object;
  const auto resp = planner::exchange(ctx.link, ctx.ledger, lm::RequestKind::SUGGEST_LOCATIONS, payload);
  std::vector<std::string> candidates;
  if (resp.ok()) {
    for (const auto& l : resp.result.at("locations")) {
      const auto name = l.get<std::string>();
      if (ctx.knowledge.place(name)) candidates.push_back(*ctx.knowledge.place(name));
    }
  }
  obs["candidates"] = candidates;
  if (candidates.empty()) {
    obs["source"] = "none";
    return fail(FailureReason::NOT_FOUND, "no one knew and no suggestion for the " + object, obs);
  }
  obs["location"] = candidates.front();
  obs["source"] = "suggestion";
  return ok(obs);
}

SkillResult run(Context& ctx, const SkillCall& c)
{
  const auto& f = c.function;
  if (f == "go_to_location") return go_to_location(ctx, c);
  if (f == "ask_location") return ask_location(ctx, c);
  if (f == "find_concrete_name_objects") return find_concrete(ctx, c);
  if (f == "find_category_name_objects") return find_category(ctx, c);
  if (f == "count_concrete_name_objects") return count_objects(ctx, text::to_lower(c.arg("objects")));
  if (f == "count_category_name_objects") return count_objects(ctx, text::to_lower(c.arg("category")));
  if (f == "find_person") return find_person(ctx, c);
  if (f == "detect_person_pose") return detect_pose(ctx, c);
  if (f == "find_specific_pose_person") return find_pose_person(ctx, c);
  if (f == "count_specific_pose_person") return count_pose_person(ctx, c);
  if (f == "count_person") return count_person(ctx);
  if (f == "follow_person") return escort(ctx, c, false);
  if (f == "guide") return escort(ctx, c, true);
  if (f == "pick") return pick(ctx, c);
  if (f == "hand_over") return hand_over(ctx, c);
  if (f == "ask_person_to_hand_over") return ask_hand_over(ctx, c);
  if (f == "place") return place(ctx, c);
  if (f == "ask_question") return ask_question(ctx, c);
  if (f == "answer_question") return answer_question(ctx, c);
  if (f == "tell_information") return tell_information(ctx, c);
  if (f == "operate_door") return operate_door(ctx, c);
  return fail(FailureReason::PRECONDITION, "no skill named '" + f + "'");
}

bool rule_matches(const InjectionRule& r, const SkillCall& c)
{
  if (r.skill != c.function) return false;
  for (const auto& [k, v] : r.match) {
    if (v != "*" && !same(c.arg(k), v)) return false;
  }
  return true;
}

}  // namespace

std::string to_string(FailureReason r)
{
  for (const auto& [k, n] : kReasonNames) {
    if (k == r) return n;
  }
  return "?";
}

FailureReason failure_reason_from(const std::string& s)
{
  for (const auto& [k, n] : kReasonNames) {
    if (s == n) return k;
  }
  throw SchemaError("unknown failure reason '" + s + "'");
}

json SkillResult::to_json() const
{
  json effects_j = json::array();
  for (const auto& e : effects) effects_j.push_back(world::effect_to_json(e));
  json j = {{"status", success ? "success" : "failure"}, {"observations", observations}, {"effects", effects_j}};
  if (reason) j["reason"] = to_string(*reason);
  if (!message.empty()) j["message"] = message;
  return j;
}

FailureInjection FailureInjection::from_json(const json& j)
{
  FailureInjection inj;
  const auto& rules = j.is_array() ? j : j.value("rules", json::array());
  for (const auto& r : rules) {
    InjectionRule rule;
    rule.skill = r.at("skill").get<std::string>();
    rule.match = r.value("match", std::map<std::string, std::string>{});
    const auto behavior = r.value("behavior", "fail_once");
    bool known = false;
    for (const auto& [k, n] : kBehaviorNames) {
      if (behavior == n) {
        rule.behavior = k;
        known = true;
      }
    }
    if (!known) throw SchemaError("injection behavior '" + behavior + "' is not fail_once, fail_n or fail_always");
    rule.n = rule.behavior == InjectionBehavior::fail_n ? r.at("n").get<int>() : 1;
    if (rule.n < 1) throw SchemaError("injection fail_n needs n >= 1");
    rule.reason = failure_reason_from(r.value("reason", "INJECTED"));
    inj.rules.push_back(std::move(rule));
  }
  return inj;
}

json FailureInjection::to_json() const
{
  json out = json::array();
  for (const auto& r : rules) {
    std::string behavior;
    for (const auto& [k, n] : kBehaviorNames) {
      if (k == r.behavior) behavior = n;
    }
    json rj = {{"skill", r.skill}, {"match", r.match}, {"behavior", behavior}, {"reason", to_string(r.reason)}};
    if (r.behavior == InjectionBehavior::fail_n) rj["n"] = r.n;
    out.push_back(rj);
  }
  return out;
}

void inject(Context& ctx, const FailureInjection& rules)
{
  for (const auto& r : rules.rules) {
    if (!find_skill(r.skill)) throw PreconditionError("injection rule names unknown skill '" + r.skill + "'");
  }
  ctx.injection = rules;
  ctx.injection_fired.assign(rules.rules.size(), 0);
}

dialogue::DialogueTurn ask(Context& ctx, const std::string& addressee, const std::string& question, bool help)
{
  say(ctx, question, addressee);
  auto turn = ctx.dialogue.ask(ctx.world, addressee, question, ctx.ledger, ctx.tick);
  if (help) ++ctx.help_requests;
  auto j = turn.to_json();
  j["help"] = help;
  ctx.trace.append("dialogue", ctx.tick, j);
  return turn;
}

void say(Context& ctx, const std::string& text, const std::string& to)
{
  ctx.trace.append("say", ctx.tick, {{"text", text}, {"to", to}});
}

SkillResult execute_skill(Context& ctx, const SkillCall& call, const ExecOptions& options)
{
  ++ctx.tick;
  ctx.trace.append("skill_start", ctx.tick,
                   {{"call", json::parse(planner::call_to_json(call).dump())}, {"exploratory", options.exploratory}});
  SkillResult result;
  if (auto err = signature_error(call.function, call.args)) {
    result = fail(FailureReason::PRECONDITION, *err);
  } else {
    std::optional<std::size_t> fired;
    for (std::size_t i = 0; i < ctx.injection.rules.size(); ++i) {
      const auto& r = ctx.injection.rules[i];
      if (!rule_matches(r, call)) continue;
      if (r.behavior != InjectionBehavior::fail_always && ctx.injection_fired[i] >= r.n) continue;
      fired = i;
      break;
    }
    if (fired) {
      ++ctx.injection_fired[*fired];
      result = fail(ctx.injection.rules[*fired].reason, "injected failure", {{"injected", true}});
    } else {
      result = run(ctx, call);
      if (result.success) {
        try {
          auto next = ctx.world;
          for (const auto& e : result.effects) next = world::apply_effect(next, e);
          ctx.world = std::move(next);
        } catch (const world::IllegalEffect& e) {
          result = fail(FailureReason::PRECONDITION, e.what());
        }
      }
    }
  }
  ctx.trace.append("skill", ctx.tick,
                   {{"call", json::parse(planner::call_to_json(call).dump())},
                    {"exploratory", options.exploratory},
                    {"result", result.to_json()}});
  return result;
}

}  // namespace gpsr::skills
