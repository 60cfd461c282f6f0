#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "gpsr/backend.hpp"
#include "gpsr/generator.hpp"
#include "gpsr/grammar.hpp"
#include "gpsr/ledger.hpp"
#include "gpsr/mock_backend.hpp"
#include "gpsr/plan.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/remote_backend.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace gpsr;
using planner::SkillCall;

namespace {

planner::Plan apple_plan()
{
  planner::Plan p;
  p.source_command = "bring me an apple from the dining table";
  p.ledger_version = 1;
  p.calls = {{"go_to_location", {{"location", "dining table"}}, 0},
             {"find_concrete_name_objects", {{"object", "apple"}}, 1},
             {"pick", {{"object", "apple"}, {"location", "dining table"}}, 2},
             {"go_to_location", {{"location", "operator"}}, 3},
             {"hand_over", {{"object", "apple"}, {"person", "operator"}}, 4}};
  return p;
}

struct Fixture {
  lm::MockBackend mock{test::commonsense()};
  planner::BackendLink link{mock, {}};
  WorldKnowledge known = test::household_knowledge();
  planner::PromptLedger minimal = test::ledger("minimal");
  planner::PromptLedger tuned = test::ledger("tuned");
};

std::vector<std::string> codes(const planner::ValidationReport& r)
{
  std::vector<std::string> out;
  for (const auto& d : r.defects) out.push_back(planner::to_string(d.code));
  return out;
}

// Plain dynamic-programming LCS, kept separate from the library's.
double lcs_ratio_oracle(const std::string& a, const std::string& b)
{
  std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = std::tolower(a[i - 1]) == std::tolower(b[j - 1]) ? t[i - 1][j - 1] + 1
                                                                   : std::max(t[i - 1][j], t[i][j - 1]);
  if (a.empty() && b.empty()) return 1.0;
  return 2.0 * t[a.size()][b.size()] / static_cast<double>(a.size() + b.size());
}

}  // namespace

// --- plan documents ---------------------------------------------------------

TEST_CASE("plan: canonical document round trip")
{
  const auto p = apple_plan();
  const auto doc = planner::serialize_plan(p);
  CHECK(planner::deserialize_plan(doc) == p);
  CHECK(planner::serialize_plan(planner::deserialize_plan(doc)) == doc);
  // fixed field order
  CHECK(doc.find("source_command") < doc.find("ledger_version"));
  CHECK(doc.find("ledger_version") < doc.find("calls"));
  CHECK(planner::describe(p.calls[2]) == "pick(location=dining table, object=apple)");
}

TEST_CASE("plan: malformed documents are rejected")
{
  CHECK_THROWS_AS(planner::parse_plan(json::parse(R"({"calls": 3})")), SchemaError);
  CHECK_THROWS_AS(planner::parse_plan(json::parse(R"({"calls": [{"function": "teleport", "args": {}}]})")),
                  SchemaError);
  CHECK_THROWS_AS(planner::parse_plan(json::parse(R"({"calls": [{"function": "pick", "args": {"object": "x"}}]})")),
                  SchemaError);
  CHECK_THROWS(planner::deserialize_plan("{not json"));
}

// --- ledger -----------------------------------------------------------------

TEST_CASE("ledger: updates append and bump the version")
{
  auto l = test::ledger("minimal");
  const auto v0 = l.version;

  auto l1 = planner::update_ledger(l, planner::AddFeedback{"deliver to the operator at the sofa, not the desk"});
  CHECK(l1.feedback_lines.size() == l.feedback_lines.size() + 1);
  CHECK(l1.version == v0 + 1);

  auto l2 = planner::update_ledger(
      l1, planner::AddPerceptionEntry{perception::PromptEntry::make("apple", "a photo of a red apple")});
  REQUIRE_FALSE(l2.perception_entries.empty());
  CHECK(l2.perception_entries.back().label == "apple");
  CHECK(l2.perception_entries.back().tags == std::set<std::string>{"red", "apple"});

  planner::AddLexicon lex{planner::AddLexicon::Kind::location, {"shelf"}};
  auto l3 = planner::update_ledger(l2, lex);
  auto l4 = planner::update_ledger(l3, lex);
  CHECK(l4.transcriber_lexicon == l3.transcriber_lexicon);
  CHECK(l4.version == l3.version + 1);

  CHECK_THROWS_AS(planner::update_ledger(l, planner::AddFeedback{""}), PreconditionError);
  CHECK_THROWS_AS(planner::update_ledger(l, planner::AddLexicon{}), PreconditionError);
}

TEST_CASE("ledger: json round trip")
{
  for (const auto* name : {"minimal", "tuned"}) {
    auto l = test::ledger(name);
    CHECK(planner::ledger_from_json(planner::ledger_to_json(l)) == l);
  }
}

// --- prompts ----------------------------------------------------------------

TEST_CASE("prompt rendering")
{
  auto l = test::ledger("minimal");
  const auto p = lm::render_prompt(l, lm::RequestKind::DECOMPOSE, {{"command", "x"}});
  CHECK(p.rfind("You are a helpful assistant for a robot.", 0) == 0);
  CHECK(p == lm::render_prompt(l, lm::RequestKind::DECOMPOSE, {{"command", "x"}}));

  l = planner::update_ledger(l, planner::AddFeedback{"first line"});
  l = planner::update_ledger(l, planner::AddFeedback{"second line"});
  const auto q = lm::render_prompt(l, lm::RequestKind::DECOMPOSE, {{"command", "x"}});
  REQUIRE(q.find("first line") != std::string::npos);
  CHECK(q.find("first line") < q.find("second line"));
}

// --- grammar and generator --------------------------------------------------

TEST_CASE("grammar: forms and tokens")
{
  auto seq = grammar::parse_form("(bring|fetch) me DET {object} [please]");
  REQUIRE(seq.size() == 5);
  CHECK(seq[0].kind == grammar::FormNode::Kind::alt);
  CHECK(seq[0].children.size() == 2);
  CHECK(seq[2].kind == grammar::FormNode::Kind::det);
  CHECK(seq[3].kind == grammar::FormNode::Kind::slot);
  CHECK(seq[3].text == "object");
  CHECK(seq[4].kind == grammar::FormNode::Kind::opt);
  CHECK(grammar::tokenize("Could you bring me the apple?") ==
        std::vector<std::string>{"could", "you", "bring", "me", "the", "apple"});
}

TEST_CASE("grammar: parse commands")
{
  const auto known = test::household_knowledge();
  auto ok = grammar::parse_command("Bring me an apple from the dining table", known);
  REQUIRE(std::holds_alternative<grammar::IntentFrame>(ok));
  const auto& frame = std::get<grammar::IntentFrame>(ok);
  CHECK(frame.slots.at("object") == "apple");
  CHECK(frame.slots.at("source") == "dining table");

  auto bad = grammar::parse_command("Could you bring me the apple from the stair lake shelf?", known);
  REQUIRE(std::holds_alternative<grammar::ParseFailure>(bad));
  CHECK(std::get<grammar::ParseFailure>(bad).kind == "location");
  CHECK(std::get<grammar::ParseFailure>(bad).text == "stair lake shelf");

  CHECK(std::holds_alternative<grammar::ParseFailure>(grammar::parse_command("sing a song about clouds", known)));
}

TEST_CASE("generator: seeded and closed under parsing")
{
  const auto w = test::household();
  const auto& templates = grammar::command_templates();
  auto a = grammar::generate_command(templates, w, 7);
  auto b = grammar::generate_command(templates, w, 7);
  CHECK(a.text == b.text);
  CHECK(a.intent == b.intent);

  auto parsed = grammar::parse_command(a.text, test::household_knowledge());
  REQUIRE(std::holds_alternative<grammar::IntentFrame>(parsed));
  CHECK(std::get<grammar::IntentFrame>(parsed).slots == a.intent.slots);

  CHECK_THROWS_AS(grammar::generate_command({}, w, 1), PreconditionError);

  auto empty = world::to_json(w);
  empty["objects"] = json::array();
  const auto bare = world::load_world(empty);
  std::vector<grammar::Template> fetch_only;
  for (const auto& t : templates)
    if (t.name == "fetch") fetch_only.push_back(t);
  REQUIRE_FALSE(fetch_only.empty());
  CHECK_THROWS_AS(grammar::generate_command(fetch_only, bare, 1), PreconditionError);
}

// --- mock backend -----------------------------------------------------------

TEST_CASE("mock: lcs ratio against an independent DP")
{
  for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
           {"shelf", "shelf"}, {"stair-like shelf", "shelf"}, {"", ""}, {"abc", ""}, {"Kitchen", "kitchn"}}) {
    CHECK(lm::lcs_ratio(a, b) == doctest::Approx(lcs_ratio_oracle(a, b)));
  }
}

TEST_CASE("mock: slot extraction")
{
  const std::vector<std::string> places = {"shelf", "side table", "kitchen shelf", "desk"};
  auto m = lm::best_slot_match("the stair-like shelf", places, 0.6);
  REQUIRE(m);
  CHECK(m->value == "shelf");
  CHECK_FALSE(lm::best_slot_match("no idea", places, 0.6));
}

TEST_CASE("mock: request kinds")
{
  Fixture f;
  auto decomp = planner::decompose("bring me an apple from the dining table", f.minimal, f.link, f.known);
  REQUIRE(std::holds_alternative<planner::Decomposition>(decomp));
  std::vector<std::string> texts;
  for (const auto& s : std::get<planner::Decomposition>(decomp).steps) texts.push_back(s.text);
  CHECK(texts == std::vector<std::string>{"Move to the dining table", "Find apple", "Pick apple",
                                          "Move to the operator", "Hand over apple to the operator"});

  // the mock ignores examples and preamble
  auto tuned = planner::decompose("bring me an apple from the dining table", f.tuned, f.link, f.known);
  REQUIRE(std::holds_alternative<planner::Decomposition>(tuned));
  CHECK(std::get<planner::Decomposition>(tuned).steps == std::get<planner::Decomposition>(decomp).steps);

  auto cannot = planner::decompose("Could you bring me the apple from the stair lake shelf?", f.minimal, f.link, f.known);
  CHECK(std::holds_alternative<planner::CannotParse>(cannot));

  json places = json::array();
  for (const auto& r : f.known.rooms) places.push_back(r);
  auto sug = planner::exchange(f.link, f.minimal, lm::RequestKind::SUGGEST_LOCATIONS,
                               {{"object", "apple"}, {"places", places}});
  REQUIRE(sug.ok());
  CHECK(sug.result.at("locations") == json({"kitchen", "dining room"}));

  auto slot = planner::exchange(f.link, f.minimal, lm::RequestKind::EXTRACT_SLOT,
                                {{"answer", "the stair-like shelf"}, {"kind", "location"},
                                 {"candidates", f.known.place_names()}});
  REQUIRE(slot.ok());
  CHECK(slot.result.at("value") == "shelf");

  // determinism
  lm::BackendRequest req{lm::RequestKind::DECOMPOSE, "", {{"command", "find the apple"}, {"known", f.known.to_json()}}};
  CHECK(f.mock.respond(req).to_json() == f.mock.respond(req).to_json());
}

TEST_CASE("backend: result shape checks")
{
  CHECK_NOTHROW(lm::check_result_shape(lm::RequestKind::DECOMPOSE, {{"steps", {"Find apple"}}}));
  CHECK_THROWS_AS(lm::check_result_shape(lm::RequestKind::DECOMPOSE, {{"steps", "Find apple"}}), lm::MalformedCompletion);
  CHECK_THROWS_AS(lm::check_result_shape(lm::RequestKind::EXTRACT_SLOT, {{"value", 3}}), lm::MalformedCompletion);
  CHECK_THROWS_AS(lm::check_result_shape(lm::RequestKind::GROUND, {{"calls", {{{"args", {}}}}}}), lm::MalformedCompletion);
  CHECK_THROWS_AS(lm::check_result_shape(lm::RequestKind::ANSWER_QUESTION, json::array()), lm::MalformedCompletion);
}

// --- remote backend ---------------------------------------------------------

namespace {

std::string completion(const json& content)
{
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content.dump()}}}}}}}.dump();
}

// A local chat-completions endpoint with scripted behaviour.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  json last_body;
  std::mutex mu;

  explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&, int)> handler)
  {
    server.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu);
        last_body = json::parse(req.body);
      }
      handler(req, res, hits++);
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer()
  {
    server.stop();
    thread.join();
  }
  lm::RemoteConfig config(double timeout = 2.0) const
  {
    lm::RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    c.model = "test-model";
    c.timeout_seconds = timeout;
    c.max_retries = 1;
    return c;
  }
};

}  // namespace

TEST_CASE("remote: request body and completion parsing")
{
  lm::RemoteConfig c;
  c.base_url = "https://example.invalid/v1";
  c.model = "m";
  lm::RemoteBackend be(c);
  auto body = be.request_body({lm::RequestKind::DECOMPOSE, "system prompt", {}});
  CHECK(body.at("model") == "m");
  CHECK(body.at("temperature") == 0);
  CHECK(body.at("messages").at(0).at("content") == "system prompt");
  CHECK(body.dump().find("Authorization") == std::string::npos);

  auto ok = lm::RemoteBackend::parse_completion(lm::RequestKind::DECOMPOSE, completion({{"steps", {"Find apple"}}}));
  CHECK(ok.ok());
  CHECK(ok.result.at("steps").at(0) == "Find apple");

  auto refusal = lm::RemoteBackend::parse_completion(lm::RequestKind::DECOMPOSE,
                                                     completion({{"error", "CANNOT_PARSE"}, {"message", "?"}}));
  REQUIRE_FALSE(refusal.ok());
  CHECK(refusal.failure->code == "CANNOT_PARSE");

  CHECK_THROWS_AS(lm::RemoteBackend::parse_completion(lm::RequestKind::DECOMPOSE, "not json"), lm::MalformedCompletion);
  CHECK_THROWS_AS(lm::RemoteBackend::parse_completion(lm::RequestKind::DECOMPOSE, R"({"choices": []})"),
                  lm::MalformedCompletion);
  CHECK_THROWS_AS(lm::RemoteBackend::parse_completion(lm::RequestKind::DECOMPOSE, completion({{"steps", 1}})),
                  lm::MalformedCompletion);

  lm::RemoteConfig bad;
  bad.base_url = "example.invalid";
  CHECK_THROWS_AS(lm::RemoteBackend{bad}, SchemaError);
}

TEST_CASE("remote: talks to a chat-completions endpoint")
{
  FakeServer fake([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(completion({{"locations", {"kitchen"}}}), "application/json");
  });
  lm::RemoteBackend be(fake.config());
  auto r = be.respond({lm::RequestKind::SUGGEST_LOCATIONS, "p", {{"object", "apple"}}});
  REQUIRE(r.ok());
  CHECK(r.result.at("locations") == json({"kitchen"}));
  CHECK(fake.last_body.at("model") == "test-model");
}

TEST_CASE("remote: server errors are retried, then surface as transport errors")
{
  FakeServer flaky([](const httplib::Request&, httplib::Response& res, int hit) {
    if (hit == 0) {
      res.status = 503;
      return;
    }
    res.set_content(completion({{"answer", "yes"}}), "application/json");
  });
  lm::RemoteBackend be(flaky.config());
  CHECK(be.respond({lm::RequestKind::ANSWER_QUESTION, "p", {}}).result.at("answer") == "yes");
  CHECK(flaky.hits == 2);

  FakeServer down([](const httplib::Request&, httplib::Response& res, int) { res.status = 500; });
  lm::RemoteBackend be2(down.config());
  CHECK_THROWS_AS(be2.respond({lm::RequestKind::ANSWER_QUESTION, "p", {}}), lm::BackendTransportError);

  FakeServer denied([](const httplib::Request&, httplib::Response& res, int) { res.status = 401; });
  lm::RemoteBackend be3(denied.config());
  CHECK_THROWS_AS(be3.respond({lm::RequestKind::ANSWER_QUESTION, "p", {}}), lm::BackendTransportError);
}

TEST_CASE("remote: slow endpoint times out")
{
  FakeServer slow([](const httplib::Request&, httplib::Response& res, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(completion({{"answer", "late"}}), "application/json");
  });
  auto cfg = slow.config(0.2);
  cfg.max_retries = 0;
  lm::RemoteBackend be(cfg);
  CHECK_THROWS_AS(be.respond({lm::RequestKind::ANSWER_QUESTION, "p", {}}), lm::BackendTimeout);
}

// --- planner ----------------------------------------------------------------

TEST_CASE("planner: ground the apple fetch")
{
  Fixture f;
  auto steps = planner::make_steps({"Move to the dining table", "Find apple", "Pick apple", "Move to the operator",
                                    "Hand over apple to the operator"});
  auto g = planner::ground(steps, f.minimal, f.link, f.known, std::string("living room"),
                           "bring me an apple from the dining table");
  REQUIRE(std::holds_alternative<planner::Plan>(g));
  const auto& plan = std::get<planner::Plan>(g);
  CHECK(plan.calls == apple_plan().calls);
  CHECK(planner::validate_plan(plan, f.known).pass());
}

TEST_CASE("planner: grounding failures")
{
  Fixture f;
  auto amb = planner::ground(planner::make_steps({"Move to the side table", "Activate speech function."}), f.minimal,
                             f.link, f.known);
  REQUIRE(std::holds_alternative<planner::GroundingFailure>(amb));
  CHECK(std::get<planner::GroundingFailure>(amb).reason == planner::GroundingReason::AMBIGUOUS_STEP);
  CHECK(std::get<planner::GroundingFailure>(amb).step == 1);

  auto unk = planner::ground(planner::make_steps({"Move to the stair-like shelf"}), f.minimal, f.link, f.known);
  REQUIRE(std::holds_alternative<planner::GroundingFailure>(unk));
  CHECK(std::get<planner::GroundingFailure>(unk).reason == planner::GroundingReason::UNKNOWN_LOCATION);
  CHECK(std::get<planner::GroundingFailure>(unk).name == "stair-like shelf");
}

TEST_CASE("planner: validator rules")
{
  const auto known = test::household_knowledge();
  planner::Plan find_first;
  find_first.calls = {{"find_category_name_objects", {{"category", "objects"}}, 0},
                      {"go_to_location", {{"location", "kitchen table"}}, 1}};
  CHECK(codes(planner::validate_plan(find_first, known)) == std::vector<std::string>{"FIND_BEFORE_NAV"});

  planner::Plan double_grasp;
  double_grasp.calls = {{"go_to_location", {{"location", "side table"}}, 0},
                        {"find_concrete_name_objects", {{"object", "tropical juice"}}, 1},
                        {"pick", {{"object", "tropical juice"}, {"location", "side table"}}, 2},
                        {"go_to_location", {{"location", "end table"}}, 3},
                        {"find_concrete_name_objects", {{"object", "apple"}}, 4},
                        {"pick", {{"object", "apple"}, {"location", "end table"}}, 5}};
  CHECK(codes(planner::validate_plan(double_grasp, known)) == std::vector<std::string>{"GRASP_WHILE_HOLDING"});

  planner::Plan blind;
  blind.calls = {{"go_to_location", {{"location", "side table"}}, 0},
                 {"pick", {{"object", "tropical juice"}, {"location", "side table"}}, 1}};
  CHECK(codes(planner::validate_plan(blind, known)) == std::vector<std::string>{"GRASP_BEFORE_FIND"});

  planner::Plan empty_hand;
  empty_hand.calls = {{"go_to_location", {{"location", "desk"}}, 0}, {"place", {{"object", "pen"}, {"location", "desk"}}, 1}};
  CHECK(codes(planner::validate_plan(empty_hand, known)) == std::vector<std::string>{"PLACE_WITHOUT_HOLDING"});

  planner::Plan nowhere;
  nowhere.calls = {{"go_to_location", {{"location", "attic"}}, 0}};
  CHECK(codes(planner::validate_plan(nowhere, known)) == std::vector<std::string>{"UNKNOWN_LOCATION"});

  CHECK(planner::validate_plan(apple_plan(), known).pass());
}

TEST_CASE("planner: every generated command grounds to a valid plan")
{
  Fixture f;
  const auto w = test::household();
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto cmd = grammar::generate_command(grammar::command_templates(), w, seed);
    CAPTURE(cmd.text);
    auto d = planner::decompose(cmd.text, f.minimal, f.link, f.known);
    REQUIRE(std::holds_alternative<planner::Decomposition>(d));
    auto g = planner::ground(std::get<planner::Decomposition>(d).steps, f.minimal, f.link, f.known, w.robot.at);
    if (auto* fail = std::get_if<planner::GroundingFailure>(&g)) {
      // an object the robot has never seen is a missing-information case, not a bad plan
      CHECK(fail->reason == planner::GroundingReason::UNKNOWN_OBJECT_LOCATION);
      continue;
    }
    CHECK(planner::validate_plan(std::get<planner::Plan>(g), f.known).pass());
  }
}
