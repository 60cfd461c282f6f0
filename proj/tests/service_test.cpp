#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "gpsr/dialogue.hpp"
#include "gpsr/service.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace gpsr;
namespace fs = std::filesystem;

namespace {

struct Live {
  fs::path trace_dir;
  service::Service svc;
  int port;
  httplib::Client cli;

  static service::ServiceConfig config(const fs::path& traces)
  {
    service::ServiceConfig c;
    c.port = 0;
    c.data_dir = GPSR_TEST_DATA_DIR;
    c.trace_dir = traces.string();
    c.operator_timeout_seconds = 20;
    return c;
  }

  Live()
      : trace_dir(fs::temp_directory_path() / ("gpsr_service_" + std::to_string(::getpid()))),
        svc(config(trace_dir)),
        port(svc.bind()),
        cli("127.0.0.1", port)
  {
    svc.start();
    cli.set_read_timeout(30, 0);
  }
  ~Live()
  {
    svc.stop();
    fs::remove_all(trace_dir);
  }

  std::pair<int, json> post(const std::string& path, const json& body)
  {
    auto r = cli.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
  std::pair<int, json> get(const std::string& path)
  {
    auto r = cli.Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }

  std::string create(const json& body = json::object())
  {
    auto [status, j] = post("/sessions", body);
    REQUIRE(status == 201);
    CHECK(j.at("state") == "awaiting_command");
    return j.at("id").get<std::string>();
  }

  // Long-polls until the session reaches one of `states`; collects every event seen.
  json wait_for(const std::string& id, std::set<std::string> states, std::vector<json>& seen, std::size_t& cursor)
  {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
    while (std::chrono::steady_clock::now() < deadline) {
      auto [status, j] = get("/sessions/" + id + "/events?cursor=" + std::to_string(cursor) + "&wait=2");
      REQUIRE(status == 200);
      for (const auto& e : j.at("events")) seen.push_back(e);
      cursor = j.at("next_cursor").get<std::size_t>();
      if (states.count(j.at("state").get<std::string>())) return j;
    }
    FAIL("session " << id << " never reached the expected state");
    return {};
  }
};

}  // namespace

TEST_CASE("service: a live session from command to verdict")
{
  Live live;
  const auto id = live.create();
  auto [s1, j1] = live.post("/sessions/" + id + "/utterance", {{"text", "Bring me the tropical juice from the side table."}});
  CHECK(s1 == 202);

  std::vector<json> seen;
  std::size_t cursor = 0;
  auto asking = live.wait_for(id, {"awaiting_operator", "finished"}, seen, cursor);
  REQUIRE(asking.at("state") == "awaiting_operator");
  CHECK(asking.at("question") == dialogue::kCompletionQuestion);

  auto [sv, jv] = live.post("/sessions/" + id + "/verdict", {{"completed", true}});
  CHECK(sv == 202);
  auto done = live.wait_for(id, {"finished"}, seen, cursor);
  CHECK(done.at("result").at("status") == "success");

  // delivered events are exactly the session trace, in order
  auto tr = live.cli.Get("/sessions/" + id + "/trace");
  REQUIRE(tr);
  std::vector<json> lines;
  std::istringstream in(tr->body);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(json::parse(line));
  CHECK(lines == seen);
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i].at("seq") == i);

  // turns are refused once the episode is over
  auto [s409, j409] = live.post("/sessions/" + id + "/utterance", {{"text", "hello"}});
  CHECK(s409 == 409);
  CHECK(j409.at("error").at("code") == "STATE_ERROR");
  auto [sv409, jv409] = live.post("/sessions/" + id + "/verdict", {{"completed", true}});
  CHECK(sv409 == 409);

  CHECK(fs::exists(live.trace_dir / (id + ".trace.jsonl")));
}

TEST_CASE("service: rephrase loop through the operator")
{
  Live live;
  const auto id = live.create({{"scenario", "cmd6_stair_like_shelf"}});
  live.post("/sessions/" + id + "/utterance", {{"text", "Could you bring me the apple from the stair lake shelf?"}});

  std::vector<json> seen;
  std::size_t cursor = 0;
  auto q = live.wait_for(id, {"awaiting_operator", "finished"}, seen, cursor);
  REQUIRE(q.at("state") == "awaiting_operator");
  CHECK(q.at("question").get<std::string>().find("rephrase") != std::string::npos);

  // a verdict is not what the robot asked for
  auto [sv, jv] = live.post("/sessions/" + id + "/verdict", {{"completed", true}});
  CHECK(sv == 409);

  live.post("/sessions/" + id + "/utterance", {{"text", "I mean the shelf."}});
  auto done_q = live.wait_for(id, {"awaiting_operator", "finished"}, seen, cursor);
  REQUIRE(done_q.at("state") == "awaiting_operator");
  CHECK(done_q.at("question") == dialogue::kCompletionQuestion);
  live.post("/sessions/" + id + "/verdict", {{"completed", true}, {"feedback", "thanks"}});
  auto done = live.wait_for(id, {"finished"}, seen, cursor);
  CHECK(done.at("result").at("status") == "success");

  bool rephrased = false, replanned = false;
  for (const auto& e : seen) {
    if (e.at("type") == "recovery" && e.at("action") == "ASK_OPERATOR_REPHRASE") rephrased = true;
    if (rephrased && e.at("type") == "plan") replanned = true;
  }
  CHECK(rephrased);
  CHECK(replanned);
}

TEST_CASE("service: concurrent sessions are independent")
{
  Live live;
  const auto a = live.create();
  const auto b = live.create();
  CHECK(a != b);
  live.post("/sessions/" + a + "/utterance", {{"text", "Bring me the tropical juice from the side table."}});
  live.post("/sessions/" + b + "/utterance", {{"text", "Bring me the pen from the desk."}});

  std::vector<json> ea, eb;
  std::size_t ca = 0, cb = 0;
  live.wait_for(a, {"awaiting_operator"}, ea, ca);
  live.wait_for(b, {"awaiting_operator"}, eb, cb);
  live.post("/sessions/" + b + "/verdict", {{"completed", true}});
  live.post("/sessions/" + a + "/verdict", {{"completed", true}});
  live.wait_for(a, {"finished"}, ea, ca);
  live.wait_for(b, {"finished"}, eb, cb);

  auto heard = [](const std::vector<json>& evs) {
    for (const auto& e : evs)
      if (e.at("type") == "transcript") return e.at("heard").get<std::string>();
    return std::string();
  };
  CHECK(heard(ea).find("tropical juice") != std::string::npos);
  CHECK(heard(eb).find("pen") != std::string::npos);
  CHECK(ea.front().at("seq") == 0);
  CHECK(eb.front().at("seq") == 0);
}

TEST_CASE("service: errors")
{
  Live live;
  auto [s404, j404] = live.get("/sessions/abc123");
  CHECK(s404 == 404);
  CHECK(j404.at("error").at("code") == "NOT_FOUND");

  auto [snos, jnos] = live.post("/sessions", {{"scenario", "no_such_scenario"}});
  CHECK(snos == 404);

  const auto id = live.create();
  auto bad = live.cli.Post("/sessions/" + id + "/utterance", "{oops", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto [s400, j400] = live.post("/sessions/" + id + "/utterance", {{"words", "hi"}});
  CHECK(s400 == 400);
  auto [sv, jv] = live.post("/sessions/" + id + "/verdict", {{"completed", true}});
  CHECK(sv == 409);
}

TEST_CASE("service: stop releases a session waiting on the operator")
{
  Live live;
  const auto id = live.create();
  live.post("/sessions/" + id + "/utterance", {{"text", "Bring me the tropical juice from the side table."}});
  std::vector<json> seen;
  std::size_t cursor = 0;
  live.wait_for(id, {"awaiting_operator"}, seen, cursor);
  const auto t0 = std::chrono::steady_clock::now();
  live.svc.stop();
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
  CHECK(fs::exists(live.trace_dir / (id + ".trace.jsonl")));
}
