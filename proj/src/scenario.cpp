#include "gpsr/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gpsr/text.hpp"

namespace gpsr::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& p)
{
  std::ifstream in(p);
  if (!in) throw ReferenceError("cannot open '" + p.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

fs::path resolve(const std::string& ref, const std::string& base_dir, const std::string& data_dir)
{
  fs::path p(ref);
  if (p.is_absolute()) return p;
  if (fs::exists(fs::path(base_dir) / p)) return fs::path(base_dir) / p;
  return fs::path(data_dir) / p;
}

// Merges per-name patches into an array of {name, ...} objects.
void patch_named(json& array, const json& patches, const char* what)
{
  if (!patches.is_object()) throw SchemaError(std::string("world_overrides.") + what + ": expected object");
  for (const auto& [name, patch] : patches.items()) {
    auto it = std::find_if(array.begin(), array.end(), [&](const json& e) { return e.value("name", "") == name; });
    if (patch.is_null()) {
      if (it != array.end()) array.erase(it);
      continue;
    }
    if (it == array.end()) {
      json e = patch;
      e["name"] = name;
      array.push_back(e);
      continue;
    }
    // an object has either a location or a holder
    if (patch.contains("location")) it->erase("held_by");
    if (patch.contains("held_by")) it->erase("location");
    it->merge_patch(patch);
  }
}

std::map<std::string, dialogue::OperatorScript> load_scripts(const json& doc)
{
  std::map<std::string, dialogue::OperatorScript> out;
  if (doc.contains("operator_script")) out[world::kOperator] = dialogue::OperatorScript::from_json(doc.at("operator_script"));
  const auto persons = doc.value("person_scripts", json::object());
  for (const auto& [key, s] : persons.items()) out[key] = dialogue::OperatorScript::from_json(s);
  return out;
}

}  // namespace

ScoreRules ScoreRules::from_json(const json& j)
{
  ScoreRules r;
  r.transcription_points = j.value("transcription_points", r.transcription_points);
  r.completion_points = j.value("completion_points", r.completion_points);
  r.help_penalty = j.value("help_penalty", r.help_penalty);
  r.tick_budget = j.value("tick_budget", r.tick_budget);
  if (!(r.help_penalty > 0.0 && r.help_penalty <= 1.0)) throw SchemaError("help_penalty must be in (0, 1]");
  if (r.tick_budget < 1) throw SchemaError("tick_budget must be >= 1");
  return r;
}

json ScoreRules::to_json() const
{
  return {{"transcription_points", transcription_points},
          {"completion_points", completion_points},
          {"help_penalty", help_penalty},
          {"tick_budget", tick_budget}};
}

json apply_world_overrides(const json& world_doc, const json& overrides)
{
  json doc = world_doc;
  if (overrides.is_null()) return doc;
  if (!overrides.is_object()) throw SchemaError("world_overrides: expected object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "objects" || key == "persons") {
      if (!doc.contains(key)) doc[key] = json::array();
      patch_named(doc[key], value, key.c_str());
    } else if (key == "operator" || key == "robot") {
      doc[key].merge_patch(value);
    } else if (key == "semantic_map") {
      if (!doc.contains(key)) doc[key] = json::array();
      json patches = json::object();
      for (const auto& [name, locs] : value.items()) patches[name] = locs.is_null() ? json(nullptr) : json{{"locations", locs}};
      auto& sm = doc[key];
      for (const auto& [name, patch] : patches.items()) {
        auto it = std::find_if(sm.begin(), sm.end(), [&](const json& e) { return e.value("name", "") == name; });
        if (it != sm.end()) sm.erase(it);
        if (!patch.is_null()) sm.push_back({{"name", name}, {"locations", patch.at("locations")}});
      }
    } else {
      throw SchemaError("world_overrides." + key + ": unknown section");
    }
  }
  return doc;
}

namespace {

Scenario parse_scenario(const json& doc, const std::string& base_dir, const std::string& data_dir)
{
  if (!doc.is_object()) throw SchemaError("scenario: expected object");
  if (doc.value("schema_version", 0) != kScenarioSchemaVersion) throw SchemaError("scenario.schema_version: unsupported version");
  Scenario s;
  s.name = doc.at("name").get<std::string>();
  s.description = doc.value("description", "");

  const auto world_ref = doc.at("world").get<std::string>();
  s.world_doc = apply_world_overrides(read_json(resolve(world_ref, base_dir, data_dir)), doc.value("world_overrides", json()));
  world::load_world(s.world_doc);  // fail early on a broken override

  s.ledger = planner::ledger_from_json(read_json(resolve(doc.at("ledger").get<std::string>(), base_dir, data_dir)));
  s.commonsense = CommonsenseTable::from_json(read_json(resolve(doc.value("commonsense", "commonsense.json"), base_dir, data_dir)));
  s.confusion = speech::ConfusionTable::from_json(read_json(resolve(doc.value("confusion", "confusion.json"), base_dir, data_dir)));

  const auto& cmd = doc.at("command");
  s.command.true_text = cmd.at("true_text").get<std::string>();
  if (cmd.contains("heard_text")) {
    s.command.heard_text = cmd.at("heard_text").get<std::string>();
  } else if (cmd.contains("asr")) {
    s.command.asr = AsrCorruption{cmd.at("asr").value("seed", std::uint64_t{0}), cmd.at("asr").value("rate", 0.0)};
  }
  s.slots = doc.value("slots", std::map<std::string, std::string>{});
  s.scripts = load_scripts(doc);
  if (doc.contains("injection")) s.injection = skills::FailureInjection::from_json(doc.at("injection"));
  if (doc.contains("perception")) s.noise = perception::NoiseConfig::from_json(doc.at("perception"));
  if (doc.contains("budget")) s.budget = recovery::RecoveryBudget::from_json(doc.at("budget"));
  if (doc.contains("tick_budget")) s.tick_budget = doc.at("tick_budget").get<long>();
  s.seed = doc.value("seed", std::uint64_t{0});

  const auto& ex = doc.value("expected", json::object());
  s.expected.completion = ex.value("completion", true);
  for (const auto& m : ex.value("modes", std::vector<std::string>{})) {
    recovery::mode_from(m);
    s.expected.modes.insert(m);
  }
  s.expected.events = ex.value("events", std::vector<json>{});
  return s;
}

}  // namespace

Scenario load_scenario(const json& doc, const std::string& base_dir, const std::string& data_dir)
{
  try {
    return parse_scenario(doc, base_dir, data_dir);
  } catch (const json::exception& e) {
    throw SchemaError("scenario '" + (doc.is_object() ? doc.value("name", std::string("?")) : "?") + "': " + e.what());
  }
}

Scenario load_scenario_file(const std::string& path, const std::string& data_dir)
{
  return load_scenario(read_json(path), fs::path(path).parent_path().string(), data_dir);
}

std::vector<std::string> scenario_files(const std::string& dir)
{
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool json_subset(const json& pattern, const json& event)
{
  if (pattern.is_object()) {
    if (!event.is_object()) return false;
    for (const auto& [k, v] : pattern.items()) {
      if (!event.contains(k) || !json_subset(v, event.at(k))) return false;
    }
    return true;
  }
  return pattern == event;
}

std::optional<std::size_t> match_events(const std::vector<json>& patterns, const std::vector<json>& events)
{
  std::size_t e = 0;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    while (e < events.size() && !json_subset(patterns[p], events[e])) ++e;
    if (e == events.size()) return p;
    ++e;
  }
  return std::nullopt;
}

}  // namespace gpsr::harness
