#include "gpsr/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "gpsr/episode.hpp"
#include "gpsr/error.hpp"
#include "gpsr/scenario.hpp"

namespace gpsr::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class State { awaiting_command, planning, executing, awaiting_operator, finished };

std::string to_string(State s)
{
  switch (s) {
    case State::awaiting_command: return "awaiting_command";
    case State::planning: return "planning";
    case State::executing: return "executing";
    case State::awaiting_operator: return "awaiting_operator";
    case State::finished: return "finished";
  }
  return "?";
}

struct Session {
  std::string id;
  harness::Scenario scenario;

  std::mutex mu;
  std::condition_variable cv;
  State state = State::awaiting_command;
  std::string question;
  std::optional<std::string> answer;
  bool answered = false;
  bool shutting_down = false;
  std::vector<json> events;
  std::optional<harness::EpisodeResult> result;
  std::thread worker;
};

void send_json(httplib::Response& res, int status, const json& body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req)
{
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw SchemaError("request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("request body: ") + e.what());
  }
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  std::thread listener;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mt19937_64 ids{std::random_device{}()};
  std::atomic<bool> stopped{false};
  bool bound = false;

  explicit Impl(ServiceConfig c) : config(std::move(c))
  {
    if (config.scenario_dir.empty()) config.scenario_dir = (fs::path(config.data_dir) / "scenarios").string();
    routes();
  }

  std::shared_ptr<Session> find(const std::string& id)
  {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw ReferenceError("no session '" + id + "'");
    return it->second;
  }

  std::string new_id()
  {
    std::lock_guard lock(mu);
    std::ostringstream os;
    os << std::hex << ids();
    return os.str();
  }

  harness::Scenario scenario_for(const json& body)
  {
    if (body.contains("scenario")) {
      const auto name = body.at("scenario").get<std::string>();
      for (const auto& f : harness::scenario_files(config.scenario_dir)) {
        auto s = harness::load_scenario_file(f, config.data_dir);
        if (s.name == name || fs::path(f).stem() == name) return s;
      }
      throw ReferenceError("no scenario named '" + name + "'");
    }
    json doc = {{"schema_version", harness::kScenarioSchemaVersion},
                {"name", "live"},
                {"world", body.value("world", config.default_world)},
                {"ledger", body.value("ledger", config.default_ledger)},
                {"command", {{"true_text", ""}}}};
    return harness::load_scenario(doc, config.data_dir, config.data_dir);
  }

  // The operator side of a live episode: publish the question, wait for a turn or verdict.
  std::optional<std::string> operator_turn(Session& s, const std::string& question)
  {
    std::unique_lock lock(s.mu);
    s.state = State::awaiting_operator;
    s.question = question;
    s.answer.reset();
    s.answered = false;
    s.cv.notify_all();
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(config.operator_timeout_seconds);
    s.cv.wait_until(lock, deadline, [&] { return s.answered || s.shutting_down; });
    s.state = State::executing;
    s.question.clear();
    auto answer = s.answered ? s.answer : std::nullopt;
    s.answered = false;
    return answer;
  }

  // Caller holds s.mu. The session leaves awaiting_operator right away so a client polling
  // after this turn never sees the question it just answered.
  static void accept_answer(Session& s, const std::string& text)
  {
    s.answer = text;
    s.answered = true;
    s.state = State::executing;
    s.question.clear();
    s.cv.notify_all();
  }

  void start_episode(const std::shared_ptr<Session>& s, const std::string& command)
  {
    s->state = State::planning;
    s->worker = std::thread([this, s, command] {
      harness::EpisodeOptions opt;
      opt.heard_override = command;
      opt.live_operator = [this, s](const std::string& q) { return operator_turn(*s, q); };
      opt.listener = [s](const json& e) {
        std::lock_guard lock(s->mu);
        if (e.value("type", "") == "skill_start" && s->state == State::planning) s->state = State::executing;
        s->events.push_back(e);
        s->cv.notify_all();
      };
      auto result = harness::run_episode(s->scenario, opt);
      persist(*s, result);
      std::lock_guard lock(s->mu);
      s->result = std::move(result);
      s->state = State::finished;
      s->cv.notify_all();
    });
  }

  void persist(const Session& s, const harness::EpisodeResult& r)
  {
    if (config.trace_dir.empty()) return;
    fs::create_directories(config.trace_dir);
    std::ofstream(fs::path(config.trace_dir) / (s.id + ".trace.jsonl")) << r.trace.serialize();
  }

  json status(Session& s)
  {
    json j = {{"id", s.id}, {"state", to_string(s.state)}, {"cursor", s.events.size()}, {"scenario", s.scenario.name}};
    if (s.state == State::awaiting_operator) j["question"] = s.question;
    if (s.result) j["result"] = s.result->summary();
    return j;
  }

  template <typename F>
  httplib::Server::Handler guarded(F f)
  {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ReferenceError& e) {
        send_error(res, 404, "NOT_FOUND", e.what());
      } catch (const SchemaError& e) {
        send_error(res, 400, e.code(), e.what());
      } catch (const Error& e) {
        send_error(res, 409, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "INTERNAL", e.what());
      }
    };
  }

  void routes()
  {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (stopped) throw PreconditionError("service is shutting down");
      auto body = parse_body(req);
      auto s = std::make_shared<Session>();
      s->scenario = scenario_for(body);
      s->id = new_id();
      {
        std::lock_guard lock(mu);
        sessions[s->id] = s;
      }
      std::lock_guard lock(s->mu);
      send_json(res, 201, status(*s));
    }));

    server.Get(R"(/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      std::lock_guard lock(s->mu);
      send_json(res, 200, status(*s));
    }));

    server.Post(R"(/sessions/([0-9a-f]+)/utterance)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      const auto body = parse_body(req);
      if (!body.contains("text") || !body.at("text").is_string()) throw SchemaError("utterance needs a text string");
      const auto text = body.at("text").get<std::string>();
      std::lock_guard lock(s->mu);
      if (s->state == State::awaiting_command) {
        start_episode(s, text);
      } else if (s->state == State::awaiting_operator) {
        accept_answer(*s, text);
      } else {
        send_error(res, 409, "STATE_ERROR", "session is " + to_string(s->state) + "; no turn expected");
        return;
      }
      send_json(res, 202, status(*s));
    }));

    server.Post(R"(/sessions/([0-9a-f]+)/verdict)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      const auto body = parse_body(req);
      if (!body.contains("completed") || !body.at("completed").is_boolean()) throw SchemaError("verdict needs completed: bool");
      std::lock_guard lock(s->mu);
      if (s->state != State::awaiting_operator || s->question != dialogue::kCompletionQuestion) {
        send_error(res, 409, "STATE_ERROR", "no completion question is outstanding");
        return;
      }
      const auto feedback = body.value("feedback", std::string());
      accept_answer(*s, body.at("completed").get<bool>() ? (feedback.empty() ? "yes" : "yes, " + feedback)
                                                         : (feedback.empty() ? "no" : "no, " + feedback));
      send_json(res, 202, status(*s));
    }));

    server.Get(R"(/sessions/([0-9a-f]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      std::size_t cursor = 0;
      double wait = 0.0;
      try {
        if (req.has_param("cursor")) cursor = std::stoul(req.get_param_value("cursor"));
        if (req.has_param("wait")) wait = std::stod(req.get_param_value("wait"));
      } catch (const std::exception&) {
        throw SchemaError("cursor and wait must be numbers");
      }
      wait = std::clamp(wait, 0.0, config.max_poll_seconds);
      std::unique_lock lock(s->mu);
      const auto entry_state = s->state;
      s->cv.wait_for(lock, std::chrono::duration<double>(wait), [&] {
        return s->events.size() > cursor || s->state != entry_state || s->state == State::finished ||
               s->shutting_down;
      });
      json events = json::array();
      for (std::size_t i = cursor; i < s->events.size(); ++i) events.push_back(s->events[i]);
      auto body = status(*s);
      body["events"] = events;
      body["next_cursor"] = std::max(cursor, s->events.size());
      send_json(res, 200, body);
    }));

    server.Get(R"(/sessions/([0-9a-f]+)/trace)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      std::lock_guard lock(s->mu);
      std::string out;
      for (const auto& e : s->events) out += e.dump() + "\n";
      res.status = 200;
      res.set_content(out, "application/x-ndjson");
    }));

    if (!config.console_dir.empty() && fs::exists(config.console_dir))
      server.set_mount_point("/console", config.console_dir);
  }

  void stop()
  {
    if (stopped.exchange(true)) return;
    std::vector<std::shared_ptr<Session>> all;
    {
      std::lock_guard lock(mu);
      for (auto& [id, s] : sessions) all.push_back(s);
    }
    for (auto& s : all) {
      std::lock_guard lock(s->mu);
      s->shutting_down = true;
      s->cv.notify_all();
    }
    for (auto& s : all) {
      if (s->worker.joinable()) s->worker.join();
    }
    server.stop();
    if (listener.joinable()) listener.join();
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind()
{
  auto& i = *impl_;
  int port = i.config.port;
  if (port == 0) {
    port = i.server.bind_to_any_port(i.config.host);
  } else if (!i.server.bind_to_port(i.config.host, port)) {
    port = -1;
  }
  if (port < 0) throw PreconditionError("cannot bind " + i.config.host + ":" + std::to_string(i.config.port));
  i.bound = true;
  return port;
}

void Service::start()
{
  if (!impl_->bound) bind();
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::run()
{
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->stop(); }

}  // namespace gpsr::service
