#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gpsr/dialogue.hpp"
#include "gpsr/knowledge.hpp"
#include "gpsr/ledger.hpp"
#include "gpsr/perception.hpp"
#include "gpsr/recovery.hpp"
#include "gpsr/skills.hpp"
#include "gpsr/world.hpp"

namespace gpsr::harness {

inline constexpr int kScenarioSchemaVersion = 1;

struct AsrCorruption {
  std::uint64_t seed = 0;
  double rate = 0.0;
};

struct CommandSpec {
  std::string true_text;
  std::optional<std::string> heard_text;
  std::optional<AsrCorruption> asr;  // used when heard_text is absent
};

struct Expected {
  bool completion = true;
  std::set<std::string> modes;        // modes_exercised, e.g. {"M1", "M3"}
  std::vector<nlohmann::json> events;  // ordered subset patterns, see match_events
};

struct ScoreRules {
  int transcription_points = 10;
  int completion_points = 100;
  double help_penalty = 0.5;
  long tick_budget = 200;

  static ScoreRules from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Scenario {
  std::string name;
  std::string description;
  nlohmann::json world_doc;  // with overrides applied
  planner::PromptLedger ledger;
  CommonsenseTable commonsense;
  speech::ConfusionTable confusion;
  CommandSpec command;
  std::map<std::string, std::string> slots;  // ground-truth slot values for transcription scoring
  std::map<std::string, dialogue::OperatorScript> scripts;
  skills::FailureInjection injection;
  perception::NoiseConfig noise;
  recovery::RecoveryBudget budget;
  std::optional<long> tick_budget;  // overrides ScoreRules::tick_budget
  std::uint64_t seed = 0;
  Expected expected;
};

// world_overrides: {"objects": {name: patch|null}, "persons": {name: patch|null},
// "operator": patch, "robot": patch, "semantic_map": {name: [locations]|null}}.
// Patches merge into the entity of that name; unknown names are added.
nlohmann::json apply_world_overrides(const nlohmann::json& world_doc, const nlohmann::json& overrides);

// Relative file references resolve against `base_dir`, then against `data_dir`.
Scenario load_scenario(const nlohmann::json& doc, const std::string& base_dir, const std::string& data_dir);
Scenario load_scenario_file(const std::string& path, const std::string& data_dir);

// Every scenario file in `dir`, by file name.
std::vector<std::string> scenario_files(const std::string& dir);

// True when `pattern`'s fields all appear in `event` (objects compared recursively, arrays
// and scalars by equality).
bool json_subset(const nlohmann::json& pattern, const nlohmann::json& event);

// Patterns must match distinct events in order. Returns the index of the first pattern that
// could not be matched, or nullopt when all matched.
std::optional<std::size_t> match_events(const std::vector<nlohmann::json>& patterns,
                                        const std::vector<nlohmann::json>& events);

}  // namespace gpsr::harness
