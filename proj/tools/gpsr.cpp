// gpsr: run scenarios, generate commands, plan a single command, or serve live sessions.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <memory>

#include "gpsr/episode.hpp"
#include "gpsr/generator.hpp"
#include "gpsr/mock_backend.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/remote_backend.hpp"
#include "gpsr/scenario.hpp"
#include "gpsr/service.hpp"
#include "gpsr/speech.hpp"

#ifndef GPSR_DATA_DIR
#define GPSR_DATA_DIR "data"
#endif

using namespace gpsr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string data_dir = GPSR_DATA_DIR;
std::string backend_kind = "mock";
std::string remote_config;

json read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ReferenceError("cannot open '" + path + "'");
  return json::parse(in);
}

std::unique_ptr<lm::Backend> make_backend(const CommonsenseTable& commonsense)
{
  if (backend_kind == "mock") return std::make_unique<lm::MockBackend>(commonsense);
  if (backend_kind == "remote") {
    if (remote_config.empty()) throw PreconditionError("--backend remote needs --remote-config");
    return std::make_unique<lm::RemoteBackend>(lm::RemoteConfig::from_json(read_json(remote_config)));
  }
  throw PreconditionError("unknown backend '" + backend_kind + "'");
}

std::string path_in_data(const std::string& p)
{
  if (fs::exists(p)) return p;
  return (fs::path(data_dir) / p).string();
}

struct Outcome {
  std::string file;
  harness::Scenario scenario;
  harness::EpisodeResult result;
  harness::ExpectationCheck check;
};

Outcome run_one(const std::string& file)
{
  auto sc = harness::load_scenario_file(file, data_dir);
  auto backend = make_backend(sc.commonsense);
  harness::EpisodeOptions opt;
  opt.backend = backend.get();
  auto result = harness::run_episode(sc, opt);
  auto check = harness::check_expectations(sc, result);
  return {file, std::move(sc), std::move(result), std::move(check)};
}

std::string modes_text(const std::set<std::string>& m)
{
  std::string s;
  for (const auto& x : m) s += (s.empty() ? "" : ",") + x;
  return s.empty() ? "-" : s;
}

void print_table(const std::vector<Outcome>& outcomes)
{
  std::cout << std::left << std::setw(28) << "scenario" << std::setw(16) << "status" << std::setw(10) << "modes"
            << std::setw(8) << "score" << std::setw(11) << "recoveries" << "check\n";
  for (const auto& o : outcomes) {
    std::cout << std::left << std::setw(28) << o.scenario.name << std::setw(16) << harness::to_string(o.result.status)
              << std::setw(10) << modes_text(o.result.modes) << std::setw(8) << o.result.score.total << std::setw(11)
              << o.result.recoveries << (o.check.pass ? "ok" : "FAIL") << "\n";
    for (const auto& f : o.check.failures) std::cout << "    " << f << "\n";
  }
}

json report_of(const std::vector<Outcome>& outcomes)
{
  json rows = json::array();
  for (const auto& o : outcomes) {
    auto row = o.result.summary();
    row["scenario"] = o.scenario.name;
    row["file"] = o.file;
    row["expectations_met"] = o.check.pass;
    row["failures"] = o.check.failures;
    rows.push_back(row);
  }
  return {{"scenarios", rows}};
}

int cmd_run(const std::string& file, const std::string& trace_out, const std::string& report_out)
{
  auto o = run_one(path_in_data(file));
  print_table({o});
  if (!trace_out.empty()) std::ofstream(trace_out) << o.result.trace.serialize();
  if (!report_out.empty()) std::ofstream(report_out) << report_of({o}).dump(2) << "\n";
  return o.check.pass ? 0 : 1;
}

int cmd_suite(const std::string& dir, const std::string& report_out, const std::string& trace_dir)
{
  const auto files = harness::scenario_files(dir.empty() ? (fs::path(data_dir) / "scenarios").string() : dir);
  std::vector<std::future<Outcome>> futures;
  for (const auto& f : files) futures.push_back(std::async(std::launch::async, run_one, f));
  std::vector<Outcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());
  print_table(outcomes);
  if (!report_out.empty()) std::ofstream(report_out) << report_of(outcomes).dump(2) << "\n";
  if (!trace_dir.empty()) {
    fs::create_directories(trace_dir);
    for (const auto& o : outcomes)
      std::ofstream(fs::path(trace_dir) / (o.scenario.name + ".trace.jsonl")) << o.result.trace.serialize();
  }
  bool all = true;
  for (const auto& o : outcomes) all = all && o.check.pass;
  return all ? 0 : 1;
}

int cmd_generate(std::uint64_t seed, int count, const std::string& world_file)
{
  const auto w = world::load_world_file(path_in_data(world_file));
  for (int i = 0; i < count; ++i) {
    const auto g = grammar::generate_command(grammar::command_templates(), w, seed + static_cast<std::uint64_t>(i));
    std::cout << json{{"seed", seed + static_cast<std::uint64_t>(i)}, {"text", g.text}, {"intent", g.intent.to_json()}}.dump()
              << "\n";
  }
  return 0;
}

int cmd_plan(const std::string& command, const std::string& world_file, const std::string& ledger_file)
{
  const auto w = world::load_world_file(path_in_data(world_file));
  const auto ledger = planner::load_ledger_file(path_in_data(ledger_file));
  const auto commonsense = CommonsenseTable::load(path_in_data("commonsense.json"));
  const auto known = knowledge_from_world(w, commonsense);
  auto backend = make_backend(commonsense);
  planner::BackendLink link{*backend, {}};

  const auto transcript = speech::transcribe(command, ledger.transcriber_lexicon).text;
  auto d = planner::decompose(transcript, ledger, link, known);
  if (auto* cp = std::get_if<planner::CannotParse>(&d)) {
    std::cout << json{{"transcript", transcript}, {"error", "CANNOT_PARSE"}, {"message", cp->message}, {"slot", cp->slot},
                      {"text", cp->text}}.dump(2)
              << "\n";
    return 1;
  }
  const auto& dec = std::get<planner::Decomposition>(d);
  std::vector<std::string> steps;
  for (const auto& s : dec.steps) steps.push_back(s.text);
  json out = {{"transcript", transcript}, {"steps", steps}, {"task", dec.task}};
  auto g = planner::ground(dec.steps, ledger, link, known, w.robot.at, transcript);
  if (auto* gf = std::get_if<planner::GroundingFailure>(&g)) {
    out["grounding_failure"] = {{"step", gf->step}, {"reason", planner::to_string(gf->reason)}, {"name", gf->name},
                                {"message", gf->message}};
    std::cout << out.dump(2) << "\n";
    return 1;
  }
  const auto& plan = std::get<planner::Plan>(g);
  out["plan"] = json::parse(planner::serialize_plan(plan));
  const auto report = planner::validate_plan(plan, known);
  out["validation"] = report.to_json();
  std::cout << out.dump(2) << "\n";
  return report.pass() ? 0 : 1;
}

service::Service* running = nullptr;

int cmd_serve(service::ServiceConfig config)
{
  config.data_dir = data_dir;
  service::Service svc(config);
  const int port = svc.bind();
  std::cout << "listening on " << config.host << ":" << port << std::endl;
  running = &svc;
  std::signal(SIGINT, [](int) {
    if (running) std::thread([] { running->stop(); }).detach();
  });
  svc.run();
  svc.stop();
  running = nullptr;
  return 0;
}

int cmd_replay(const std::string& trace_file, const std::string& scenario_dir)
{
  std::ifstream in(trace_file);
  if (!in) throw ReferenceError("cannot open '" + trace_file + "'");
  const std::string recorded((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto events = harness::Trace::parse(recorded);
  if (events.empty() || events.front().value("type", "") != "episode_start")
    throw SchemaError("trace does not begin with episode_start");
  const auto name = events.front().at("scenario").get<std::string>();
  const auto dir = scenario_dir.empty() ? (fs::path(data_dir) / "scenarios").string() : scenario_dir;
  for (const auto& f : harness::scenario_files(dir)) {
    auto sc = harness::load_scenario_file(f, data_dir);
    if (sc.name != name) continue;
    auto backend = make_backend(sc.commonsense);
    harness::EpisodeOptions opt;
    opt.backend = backend.get();
    const auto replayed = harness::run_episode(sc, opt).trace.serialize();
    if (replayed == recorded) {
      std::cout << "replay identical: " << events.size() << " events\n";
      return 0;
    }
    const auto again = harness::Trace::parse(replayed);
    std::size_t i = 0;
    while (i < again.size() && i < events.size() && again[i] == events[i]) ++i;
    std::cout << "replay differs at event " << i << "\n";
    if (i < events.size()) std::cout << "  recorded: " << events[i].dump() << "\n";
    if (i < again.size()) std::cout << "  replayed: " << again[i].dump() << "\n";
    return 1;
  }
  throw ReferenceError("no scenario named '" + name + "' in " + dir);
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"General-purpose service robot planner with self-recovery"};
  app.require_subcommand(1);
  app.add_option("--data-dir", data_dir, "directory with worlds, ledgers, scenarios");
  app.add_option("--backend", backend_kind, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--remote-config", remote_config, "JSON file with base_url, model, api_key_env");

  std::string scenario_file, trace_out, report_out, suite_dir, trace_dir;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("scenario", scenario_file, "scenario file")->required();
  run->add_option("--trace", trace_out, "write the canonical trace here");
  run->add_option("--report", report_out, "write a JSON report here");

  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("--dir", suite_dir, "scenario directory (default: bundled)");
  suite->add_option("--report", report_out, "write a JSON report here");
  suite->add_option("--trace-dir", trace_dir, "write each trace here");

  std::uint64_t seed = 0;
  int count = 1;
  std::string world_file = "worlds/household.json", ledger_file = "ledgers/tuned.json";
  auto* gen = app.add_subcommand("generate", "generate seeded commands");
  gen->add_option("--seed", seed, "first seed");
  gen->add_option("--count", count, "how many")->check(CLI::PositiveNumber);
  gen->add_option("--world", world_file, "world file");

  std::string command;
  auto* plan = app.add_subcommand("plan", "decompose, ground and validate one command");
  plan->add_option("--command", command, "the command")->required();
  plan->add_option("--world", world_file, "world file");
  plan->add_option("--ledger", ledger_file, "prompt ledger file");

  service::ServiceConfig svc;
  auto* serve = app.add_subcommand("serve", "serve live sessions over HTTP");
  serve->add_option("--host", svc.host, "bind address");
  serve->add_option("--port", svc.port, "port (0: any free port)");
  serve->add_option("--trace-dir", svc.trace_dir, "persist finished traces here");
  serve->add_option("--console-dir", svc.console_dir, "static console bundle served at /console");
  serve->add_option("--operator-timeout", svc.operator_timeout_seconds, "seconds to wait for an operator turn");

  std::string replay_file, replay_dir;
  auto* replay = app.add_subcommand("replay", "re-run the scenario of a trace and compare byte for byte");
  replay->add_option("trace", replay_file, "trace file")->required();
  replay->add_option("--scenarios", replay_dir, "scenario directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_file, trace_out, report_out);
    if (*suite) return cmd_suite(suite_dir, report_out, trace_dir);
    if (*gen) return cmd_generate(seed, count, world_file);
    if (*plan) return cmd_plan(command, world_file, ledger_file);
    if (*serve) return cmd_serve(svc);
    if (*replay) return cmd_replay(replay_file, replay_dir);
  } catch (const Error& e) {
    std::cerr << "error " << e.code() << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}
