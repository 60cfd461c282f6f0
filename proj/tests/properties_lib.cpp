#include "properties.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "gpsr/episode.hpp"
#include "gpsr/generator.hpp"
#include "gpsr/grammar.hpp"
#include "gpsr/mock_backend.hpp"
#include "gpsr/plan.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/scenario.hpp"
#include "gpsr/skill_registry.hpp"
#include "support.hpp"

namespace gpsr::test {

using nlohmann::json;
using planner::Plan;
using planner::SkillCall;

namespace {

using Rng = std::mt19937_64;

template <typename T>
const T& pick_one(Rng& rng, const std::vector<T>& v)
{
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int roll(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Times the body and fills in name and seconds.
template <typename F>
PropertyResult timed(const std::string& name, F body)
{
  PropertyResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void fail(PropertyResult& r, const std::string& why)
{
  if (r.failures++ == 0) r.first_failure = why;
}

std::string random_text(Rng& rng)
{
  static const std::vector<std::string> bits = {"apple", "side table", "Ashley", "\"quoted\"", "a,b", "caf\xc3\xa9",
                                                "tab\there", "", "x=y", "new\nline", "(paren)", "operator"};
  std::string s;
  for (int i = roll(rng, 0, 3); i > 0; --i) s += pick_one(rng, bits) + (i > 1 ? " " : "");
  return s;
}

// --- validator oracle ---------------------------------------------------------
//
// Position, gripper and found-set simulation written from the rule list, not from the
// validator's source. Returns (code, call index) pairs in call order.

using Finding = std::pair<std::string, std::size_t>;

std::vector<Finding> oracle_defects(const Plan& plan, const WorldKnowledge& known)
{
  std::vector<Finding> out;
  std::optional<std::string> at, holding;
  std::map<std::string, std::string> found;
  auto known_place = [&](const std::string& p) { return p == "operator" || known.place(p).has_value(); };

  for (std::size_t i = 0; i < plan.calls.size(); ++i) {
    const auto& c = plan.calls[i];
    const auto& f = c.function;
    auto arg = [&](const char* k) { return c.arg(k); };
    if (!skills::find_skill(f)) {
      out.emplace_back("UNKNOWN_SKILL", i);
    } else if (f == "go_to_location") {
      if (!known_place(arg("location"))) out.emplace_back("UNKNOWN_LOCATION", i);
      at = arg("location");
    } else if (f == "find_concrete_name_objects" || f == "find_category_name_objects") {
      const auto what = f == "find_concrete_name_objects" ? arg("object") : arg("category");
      const auto room = arg("room");
      if (!room.empty() && !known_place(room)) {
        out.emplace_back("UNKNOWN_LOCATION", i);
        continue;
      }
      const bool wrong_room = !room.empty() && at && known.room_of(*at) != known.room_of(room);
      if (!at || wrong_room) out.emplace_back("FIND_BEFORE_NAV", i);
      else found[what] = *at;
    } else if (f == "pick") {
      const auto loc = arg("location");
      if (!known_place(loc)) {
        out.emplace_back("UNKNOWN_LOCATION", i);
        continue;
      }
      const bool seen_here = at && *at == loc && found.count(arg("object")) && found.at(arg("object")) == loc;
      if (holding) out.emplace_back("GRASP_WHILE_HOLDING", i);
      else if (!seen_here) out.emplace_back("GRASP_BEFORE_FIND", i);
      holding = arg("object");
    } else if (f == "place" || f == "hand_over") {
      if (f == "place" && !known_place(arg("location"))) {
        out.emplace_back("UNKNOWN_LOCATION", i);
        continue;
      }
      if (!holding) out.emplace_back("PLACE_WITHOUT_HOLDING", i);
      holding.reset();
      if (f == "place") at = arg("location");
    } else if (f == "ask_person_to_hand_over") {
      if (holding) out.emplace_back("GRASP_WHILE_HOLDING", i);
      holding = arg("object");
    } else if (f == "guide" || f == "follow_person") {
      if (!arg("location").empty()) {
        if (known_place(arg("location"))) at = arg("location");
        else out.emplace_back("UNKNOWN_LOCATION", i);
      }
    } else if (f == "operate_door") {
      if (!known_place(arg("location"))) out.emplace_back("UNKNOWN_LOCATION", i);
    }
  }
  return out;
}

std::vector<Finding> validator_findings(const Plan& plan, const WorldKnowledge& known)
{
  std::vector<Finding> out;
  for (const auto& d : planner::validate_plan(plan, known).defects) out.emplace_back(planner::to_string(d.code), d.index);
  return out;
}

// Valid plans to mutate: grounded generated commands plus two fetch-and-deliver plans.
std::vector<Plan> base_plans(const world::WorldState& w, const WorldKnowledge& known)
{
  lm::MockBackend mock(test::commonsense());
  planner::BackendLink link{mock, {}};
  const auto ledger = test::ledger("minimal");
  std::vector<Plan> plans;
  for (std::uint64_t s = 0; plans.size() < 40 && s < 400; ++s) {
    auto cmd = grammar::generate_command(grammar::command_templates(), w, s);
    auto d = planner::decompose(cmd.text, ledger, link, known);
    if (!std::holds_alternative<planner::Decomposition>(d)) continue;
    auto g = planner::ground(std::get<planner::Decomposition>(d).steps, ledger, link, known, w.robot.at);
    if (auto* p = std::get_if<Plan>(&g); p && p->calls.size() >= 3) plans.push_back(*p);
  }
  Plan two;
  two.calls = {{"go_to_location", {{"location", "side table"}}, 0},
               {"find_concrete_name_objects", {{"object", "tropical juice"}}, 1},
               {"pick", {{"object", "tropical juice"}, {"location", "side table"}}, 2},
               {"place", {{"object", "tropical juice"}, {"location", "desk"}}, 3},
               {"go_to_location", {{"location", "dining table"}}, 4},
               {"find_concrete_name_objects", {{"object", "apple"}}, 5},
               {"pick", {{"object", "apple"}, {"location", "dining table"}}, 6},
               {"go_to_location", {{"location", "operator"}}, 7},
               {"hand_over", {{"object", "apple"}, {"person", "operator"}}, 8}};
  plans.push_back(two);
  return plans;
}

Plan mutate(Plan p, Rng& rng, const WorldKnowledge& known, std::string& how)
{
  const auto places = known.place_names();
  const int op = roll(rng, 0, 4);
  const auto n = p.calls.size();
  auto idx = [&] { return static_cast<std::size_t>(roll(rng, 0, static_cast<int>(n) - 1)); };
  switch (op) {
    case 0: {
      auto a = idx(), b = idx();
      std::swap(p.calls[a], p.calls[b]);
      how = "swap " + std::to_string(a) + "," + std::to_string(b);
      break;
    }
    case 1: {
      auto a = idx();
      p.calls.erase(p.calls.begin() + static_cast<long>(a));
      how = "drop " + std::to_string(a);
      break;
    }
    case 2: {
      std::vector<std::size_t> with_place;
      for (std::size_t i = 0; i < n; ++i)
        if (p.calls[i].args.count("location") || p.calls[i].args.count("room")) with_place.push_back(i);
      if (with_place.empty()) return mutate(p, rng, known, how);
      auto a = pick_one(rng, with_place);
      auto& args = p.calls[a].args;
      auto& slot = args.count("location") ? args["location"] : args["room"];
      slot = roll(rng, 0, 2) == 0 ? std::string("stair lake shelf") : pick_one(rng, places);
      how = "rename " + std::to_string(a) + " -> " + slot;
      break;
    }
    case 3: {
      auto a = idx();
      p.calls.insert(p.calls.begin() + static_cast<long>(a), p.calls[a]);
      how = "duplicate " + std::to_string(a);
      break;
    }
    default: {
      auto a = idx();
      SkillCall extra{"pick", {{"object", "mug"}, {"location", pick_one(rng, places)}}, 0};
      p.calls.insert(p.calls.begin() + static_cast<long>(a), extra);
      how = "insert pick at " + std::to_string(a);
      break;
    }
  }
  return p;
}

// --- episodes -----------------------------------------------------------------

harness::Scenario bundled(const std::string& name)
{
  return harness::load_scenario_file(data_path("scenarios/" + name + ".json"), data_path(""));
}

std::vector<harness::Scenario> all_bundled()
{
  std::vector<harness::Scenario> out;
  for (const auto& f : harness::scenario_files(data_path("scenarios"))) out.push_back(harness::load_scenario_file(f, data_path("")));
  return out;
}

harness::Scenario with_command(harness::Scenario s, const grammar::GeneratedCommand& cmd, std::uint64_t seed)
{
  s.name = "generated";
  s.command.true_text = cmd.text;
  s.command.heard_text = cmd.text;
  s.slots = cmd.intent.slots;
  s.seed = seed;
  return s;
}

}  // namespace

PropertyResult plan_round_trip(int n, std::uint64_t seed)
{
  return timed("plan round trip", [&](PropertyResult& r) {
    Rng rng(seed);
    const auto& reg = skills::registry();
    for (int i = 0; i < n; ++i, ++r.cases) {
      Plan p;
      p.source_command = random_text(rng);
      p.ledger_version = roll(rng, 0, 1000);
      for (int k = roll(rng, 0, 8); k > 0; --k) {
        const auto& spec = pick_one(rng, reg);
        SkillCall c{spec.name, {}, static_cast<std::size_t>(roll(rng, 0, 9))};
        for (const auto& a : spec.required) c.args[a] = random_text(rng);
        for (const auto& a : spec.optional)
          if (roll(rng, 0, 1)) c.args[a] = random_text(rng);
        p.calls.push_back(std::move(c));
      }
      const auto doc = planner::serialize_plan(p);
      const auto back = planner::deserialize_plan(doc);
      if (!(back == p) || planner::serialize_plan(back) != doc) fail(r, "case " + std::to_string(i) + ": " + doc);
    }
  });
}

PropertyResult validator_mutations(int n, std::uint64_t seed)
{
  return timed("validator mutations", [&](PropertyResult& r) {
    Rng rng(seed);
    const auto w = household();
    const auto known = knowledge_from_world(w, test::commonsense());
    const auto bases = base_plans(w, known);
    for (const auto& b : bases) {
      if (!planner::validate_plan(b, known).pass()) fail(r, "base plan does not validate: " + planner::serialize_plan(b));
    }
    for (int i = 0; i < n; ++i, ++r.cases) {
      std::string how;
      const auto m = mutate(pick_one(rng, bases), rng, known, how);
      const auto expect = oracle_defects(m, known);
      const auto got = validator_findings(m, known);
      std::set<std::string> rules;
      for (const auto& [code, idx] : expect) rules.insert(code);
      for (const auto& code : rules) ++r.counts[code];
      if (expect.empty()) ++r.counts["clean"];
      if (got != expect) fail(r, "case " + std::to_string(i) + " (" + how + "): " + planner::serialize_plan(m));
    }
    for (const char* rule : {"FIND_BEFORE_NAV", "GRASP_BEFORE_FIND", "GRASP_WHILE_HOLDING", "PLACE_WITHOUT_HOLDING",
                             "UNKNOWN_LOCATION"}) {
      if (r.counts[rule] == 0) fail(r, std::string("no mutation exercised ") + rule);
    }
  });
}

PropertyResult world_conservation(int n, std::uint64_t seed)
{
  return timed("world conservation", [&](PropertyResult& r) {
    Rng rng(seed);
    const auto start = household();
    std::vector<std::string> objects, persons, places;
    for (const auto& o : start.objects) objects.push_back(o.name);
    for (const auto& p : start.persons) persons.push_back(p.name);
    for (const auto& l : start.locations) places.push_back(l.name);
    for (const auto& rm : start.rooms) places.push_back(rm.name);
    places.push_back("nowhere");
    const std::vector<std::string> rooms = [&] {
      std::vector<std::string> v;
      for (const auto& rm : start.rooms) v.push_back(rm.name);
      return v;
    }();
    auto names = [](const world::WorldState& w) {
      std::vector<std::string> v;
      for (const auto& o : w.objects) v.push_back(o.name);
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto initial = names(start);

    for (int i = 0; i < n; ++i, ++r.cases) {
      auto w = start;
      std::vector<world::Effect> applied;
      for (int k = 0; k < 30; ++k) {
        world::Effect e;
        switch (roll(rng, 0, 6)) {
          case 0: e = world::MoveRobot{pick_one(rng, places)}; break;
          case 1: e = world::Grasp{pick_one(rng, objects)}; break;
          case 2: e = world::ReleaseTo{pick_one(rng, places)}; break;
          case 3: e = world::TransferToPerson{pick_one(rng, persons)}; break;
          case 4: e = world::MovePerson{pick_one(rng, persons), pick_one(rng, rooms)}; break;
          case 5: e = world::SetDoor{pick_one(rng, places), roll(rng, 0, 1) ? world::DoorState::open : world::DoorState::closed}; break;
          default: e = world::MoveObject{pick_one(rng, objects), pick_one(rng, places)}; break;
        }
        const auto before = world::serialize(w);
        try {
          w = world::apply_effect(w, e);
          applied.push_back(e);
          ++r.counts["legal"];
        } catch (const world::IllegalEffect&) {
          ++r.counts["rejected"];
          if (world::serialize(w) != before) fail(r, "rejected effect changed the world");
        }
        if (names(w) != initial) fail(r, "object multiset changed after " + world::effect_to_json(e).dump());
        if (auto bad = world::check_invariants(w); !bad.empty()) fail(r, "invariant: " + bad.front());
      }
      auto again = start;
      for (const auto& e : applied) again = world::apply_effect(again, e);
      if (world::serialize(again) != world::serialize(w)) fail(r, "replaying the same effects gave a different world");
    }
  });
}

PropertyResult replay_determinism(int n, std::uint64_t seed)
{
  return timed("replay determinism", [&](PropertyResult& r) {
    const auto bundled_scenarios = all_bundled();
    const auto base = bundled("extra_passthrough");
    const auto w = world::load_world(base.world_doc);
    for (int i = 0; i < n; ++i, ++r.cases) {
      harness::Scenario s;
      if (i % 5 == 0) {
        s = bundled_scenarios[static_cast<std::size_t>(i / 5) % bundled_scenarios.size()];
      } else {
        s = with_command(base, grammar::generate_command(grammar::command_templates(), w, seed + static_cast<std::uint64_t>(i)),
                         static_cast<std::uint64_t>(i));
      }
      const auto a = harness::run_episode(s).trace.serialize();
      const auto b = harness::run_episode(s).trace.serialize();
      ++r.counts[s.name == "generated" ? "generated" : "bundled"];
      if (a != b) fail(r, "case " + std::to_string(i) + " (" + s.command.true_text + ") traces differ");
    }
  });
}

PropertyResult score_monotonicity(int n, std::uint64_t seed)
{
  return timed("score monotonicity", [&](PropertyResult& r) {
    Rng rng(seed);
    const std::vector<std::string> words = {"apple", "shelf", "side table", "Ashley", "kitchen", "bring", "the"};
    const std::vector<std::string> statuses = {"success", "give_up", "tick_exhausted"};
    for (int i = 0; i < n; ++i, ++r.cases) {
      harness::ScoreRules rules;
      rules.help_penalty = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      json slots = json::object();
      for (int k = roll(rng, 0, 2); k > 0; --k) slots["s" + std::to_string(k)] = pick_one(rng, words);
      std::string heard;
      for (int k = roll(rng, 1, 6); k > 0; --k) heard += pick_one(rng, words) + " ";
      std::vector<json> evs = {{{"type", "episode_start"}, {"slots", slots}}, {{"type", "transcript"}, {"text", heard}}};
      for (int k = roll(rng, 0, 3); k > 0; --k) evs.push_back({{"type", "dialogue"}, {"help", roll(rng, 0, 1) == 1}});
      const auto status = pick_one(rng, statuses);
      auto with_end = [&](std::vector<json> e, const std::string& st) {
        e.push_back({{"type", "episode_end"}, {"status", st}});
        return e;
      };
      const auto base = harness::score_episode(with_end(evs, status), rules).total;

      auto more = evs;
      more.insert(more.begin() + roll(rng, 2, static_cast<int>(more.size())), json{{"type", "dialogue"}, {"help", true}});
      const auto helped = harness::score_episode(with_end(more, status), rules).total;
      const auto failed = harness::score_episode(with_end(evs, "give_up"), rules).total;
      if (helped > base + 1e-9) fail(r, "case " + std::to_string(i) + ": extra help raised the score");
      if (failed > base + 1e-9) fail(r, "case " + std::to_string(i) + ": failing raised the score");
      ++r.counts[status];
    }
  });
}

PropertyResult recovery_termination(int n, std::uint64_t seed)
{
  return timed("recovery termination", [&](PropertyResult& r) {
    Rng rng(seed);
    const auto scenarios = all_bundled();
    const std::vector<std::string> skills_hit = {"go_to_location",  "find_concrete_name_objects", "find_category_name_objects",
                                                 "find_person",     "pick",                       "place",
                                                 "hand_over",       "ask_question",               "ask_location"};
    const std::vector<std::string> reasons = {"NOT_FOUND", "GRASP_FAILED", "NAV_FAILED", "NO_RESPONSE"};
    for (int i = 0; i < n; ++i, ++r.cases) {
      auto s = pick_one(rng, scenarios);
      s.budget.max_skill_retries = roll(rng, 0, 3);
      s.budget.max_replans = roll(rng, 0, 3);
      s.budget.max_operator_queries = roll(rng, 0, 3);
      s.budget.max_suggestions = roll(rng, 1, 3);
      s.injection.rules.clear();
      for (int k = roll(rng, 0, 2); k > 0; --k) {
        skills::InjectionRule rule;
        rule.skill = pick_one(rng, skills_hit);
        rule.behavior = static_cast<skills::InjectionBehavior>(roll(rng, 0, 2));
        rule.n = roll(rng, 1, 4);
        rule.reason = skills::failure_reason_from(pick_one(rng, reasons));
        s.injection.rules.push_back(rule);
      }
      const auto result = harness::run_episode(s);
      const auto events = result.trace.events();

      std::size_t plan_calls = 0;
      for (const auto& e : harness::events_of(events, "plan")) plan_calls += e.at("plan").at("calls").size();
      const auto bound = static_cast<std::size_t>(s.budget.max_skill_retries) * plan_calls +
                         static_cast<std::size_t>(s.budget.max_replans + s.budget.max_operator_queries) + 1;
      const auto ends = harness::events_of(events, "episode_end");
      ++r.counts[harness::to_string(result.status)];
      if (ends.size() != 1) fail(r, "case " + std::to_string(i) + ": " + std::to_string(ends.size()) + " terminal events");
      if (static_cast<std::size_t>(result.recoveries) > bound) {
        std::ostringstream os;
        os << "case " << i << " (" << s.name << "): " << result.recoveries << " recoveries > bound " << bound;
        fail(r, os.str());
      }
    }
  });
}

PropertyResult generator_closure(int n, std::uint64_t seed)
{
  return timed("generator closure", [&](PropertyResult& r) {
    const auto w = household();
    const auto known = knowledge_from_world(w, test::commonsense());
    lm::MockBackend mock(test::commonsense());
    planner::BackendLink link{mock, {}};
    const auto ledger = test::ledger("minimal");
    for (int i = 0; i < n; ++i, ++r.cases) {
      const auto cmd = grammar::generate_command(grammar::command_templates(), w, seed + static_cast<std::uint64_t>(i));
      ++r.counts[cmd.intent.template_name];
      const auto d = planner::decompose(cmd.text, ledger, link, known);
      if (const auto* c = std::get_if<planner::CannotParse>(&d)) fail(r, "CANNOT_PARSE: \"" + cmd.text + "\": " + c->message);
    }
  });
}

}  // namespace gpsr::test
