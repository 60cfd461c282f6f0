#include <doctest.h>

#include "gpsr/episode.hpp"
#include "gpsr/scenario.hpp"
#include "gpsr/trace.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace gpsr;
using namespace gpsr::harness;

namespace {

Scenario scenario(const std::string& name)
{
  return load_scenario_file(test::data_path("scenarios/" + name + ".json"), test::data_path(""));
}

json scenario_doc(const std::string& name) { return test::read_json("scenarios/" + name + ".json"); }

Scenario from_doc(const json& doc) { return load_scenario(doc, test::data_path("scenarios"), test::data_path("")); }

std::vector<json> events(std::initializer_list<json> list) { return std::vector<json>(list.begin(), list.end()); }

json start(json slots) { return {{"type", "episode_start"}, {"slots", std::move(slots)}}; }
json transcript(const std::string& t) { return {{"type", "transcript"}, {"text", t}}; }
json help() { return {{"type", "dialogue"}, {"help", true}}; }
json end(const std::string& status) { return {{"type", "episode_end"}, {"status", status}}; }

}  // namespace

// --- trace ------------------------------------------------------------------

TEST_CASE("trace: canonical lines round trip")
{
  Trace t;
  t.append("say", 1, {{"text", "hello"}, {"to", "operator"}});
  t.append("skill", 2, {{"b", 1}, {"a", 2}});
  const auto text = t.serialize();
  CHECK(text.find("\"a\":2,\"b\":1") != std::string::npos);  // sorted keys
  auto parsed = Trace::parse(text);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].at("seq") == 0);
  CHECK(parsed[1].at("tick") == 2);
  CHECK(parsed == t.events());
  CHECK(events_of(parsed, "say").size() == 1);
  CHECK(t.since(1).size() == 1);
}

// --- scenario loading -------------------------------------------------------

TEST_CASE("scenario: bundled files load")
{
  const auto files = scenario_files(test::data_path("scenarios"));
  CHECK(files.size() >= 7);
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK_NOTHROW(load_scenario_file(f, test::data_path("")));
  }
  auto s = scenario("cmd7_ask_ashley_dinner");
  CHECK(s.expected.modes == std::set<std::string>{"M3"});
  CHECK(s.injection.rules.size() == 1);
  CHECK(s.scripts.count("operator"));
  CHECK(s.scripts.count("ashley"));
}

TEST_CASE("scenario: world overrides")
{
  const auto base = test::read_json("worlds/household.json");
  auto out = apply_world_overrides(base, json::parse(R"({
    "objects": {"apple": {"location": "shelf"}, "mug": null,
                "kiwi": {"category": "fruit", "tags": ["green", "kiwi"], "location": "desk"}},
    "persons": {"Ashley": {"responsive": false}},
    "robot": {"at": "study"},
    "semantic_map": {"book": null}
  })"));
  auto w = world::load_world(out);
  CHECK(w.find_object("apple")->place == world::Place::at("shelf"));
  CHECK_FALSE(w.find_object("mug"));
  CHECK(w.find_object("kiwi"));
  CHECK_FALSE(w.find_person("Ashley")->responsive);
  CHECK(w.robot.at == "study");
  CHECK_FALSE(w.semantic_map.entries.count("book"));
}

TEST_CASE("scenario: bad documents")
{
  auto doc = scenario_doc("cmd1_bring_apple_side_table");
  doc["world"] = "worlds/nowhere.json";
  CHECK_THROWS(from_doc(doc));

  doc = scenario_doc("cmd1_bring_apple_side_table");
  doc.erase("command");
  CHECK_THROWS_AS(from_doc(doc), SchemaError);
}

TEST_CASE("scenario: event pattern matching")
{
  const std::vector<json> evs = {{{"type", "a"}, {"x", {{"y", 1}, {"z", 2}}}}, {{"type", "b"}}, {{"type", "a"}, {"x", 3}}};
  CHECK(json_subset({{"x", {{"y", 1}}}}, evs[0]));
  CHECK_FALSE(json_subset({{"x", {{"y", 2}}}}, evs[0]));
  CHECK_FALSE(match_events({{{"type", "a"}}, {{"type", "b"}}, {{"type", "a"}}}, evs));
  CHECK(match_events({{{"type", "b"}}, {{"type", "b"}}}, evs) == std::optional<std::size_t>(1));
  CHECK(match_events({{{"type", "b"}}, {{"type", "a"}, {"x", {{"y", 1}}}}}, evs) == std::optional<std::size_t>(1));
}

// --- scoring ----------------------------------------------------------------

TEST_CASE("score: defaults")
{
  const ScoreRules rules;
  const json slots = {{"object", "apple"}, {"source", "shelf"}};
  const std::string heard = "could you bring me the apple from the shelf";

  auto clean = score_episode(events({start(slots), transcript(heard), end("success")}), rules);
  CHECK(clean.total == 110);

  auto helped = score_episode(events({start(slots), transcript(heard), help(), end("success")}), rules);
  CHECK(helped.total == 60);
  CHECK(helped.help_requests == 1);

  auto two = score_episode(events({start(slots), transcript(heard), help(), help(), end("success")}), rules);
  CHECK(two.total == 10 + 25);

  auto gave_up = score_episode(events({start(slots), transcript(heard), end("give_up")}), rules);
  CHECK(gave_up.total == 10);

  auto misheard = score_episode(events({start(slots), transcript("bring me the apple from the stair lake"), end("give_up")}), rules);
  CHECK(misheard.total == 0);

  CHECK_THROWS_AS(score_episode(events({start(slots)}), rules), PreconditionError);
}

// --- episodes ---------------------------------------------------------------

TEST_CASE("episode: passthrough takes no recovery")
{
  auto s = scenario("extra_passthrough");
  auto r = run_episode(s);
  CHECK(r.status == Terminal::success);
  CHECK(r.recoveries == 0);
  CHECK(r.modes.empty());
  CHECK(events_of(r.trace.events(), "failure").empty());
  CHECK(events_of(r.trace.events(), "recovery").empty());
  CHECK(r.score.total == 110);
  CHECK(r.final_world.find_object("tropical juice")->place == world::Place::with_person("operator"));
}

TEST_CASE("episode: scores of the bundled scenarios")
{
  auto s6 = scenario("cmd6_stair_like_shelf");
  auto r6 = run_episode(s6);
  CHECK(r6.status == Terminal::success);
  CHECK(r6.score.help_requests == 1);
  CHECK(r6.score.total == 60);
  CHECK(check_expectations(s6, r6).failures.empty());

  auto s1 = scenario("cmd1_bring_apple_side_table");
  auto r1 = run_episode(s1);
  CHECK(r1.status == Terminal::success);
  CHECK(r1.recoveries >= 1);
  for (const auto& m : r1.modes) CHECK((m == "M1" || m == "M3"));
}

TEST_CASE("episode: exhausted budget gives up with an apology")
{
  auto doc = scenario_doc("cmd7_ask_ashley_dinner");
  doc["injection"][0]["behavior"] = "fail_always";
  doc["budget"] = {{"max_skill_retries", 1}, {"max_replans", 0}, {"max_operator_queries", 0}};
  auto s = from_doc(doc);
  auto r = run_episode(s);
  CHECK(r.status == Terminal::give_up);
  CHECK(r.score.total == 10);
  auto recs = events_of(r.trace.events(), "recovery");
  REQUIRE_FALSE(recs.empty());
  CHECK(recs.back().at("action") == "GIVE_UP");
  auto says = events_of(r.trace.events(), "say");
  REQUIRE_FALSE(says.empty());
  CHECK(says.back().at("text").get<std::string>().find("sorry") != std::string::npos);
}

TEST_CASE("episode: tick budget")
{
  auto doc = scenario_doc("cmd1_bring_apple_side_table");
  doc["tick_budget"] = 2;
  auto r = run_episode(from_doc(doc));
  CHECK(r.status == Terminal::tick_exhausted);
}

TEST_CASE("episode: negative verdict teaches a perception entry")
{
  auto s = scenario("extra_wrong_fruit");
  auto r = run_episode(s);
  CHECK(r.status == Terminal::success);
  CHECK(r.modes == std::set<std::string>{"M2"});
  CHECK(r.final_ledger.version > s.ledger.version);
  CHECK(r.final_ledger.perception_entries.size() > s.ledger.perception_entries.size());
}
