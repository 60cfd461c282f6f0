#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gpsr/backend.hpp"
#include "gpsr/dialogue.hpp"
#include "gpsr/scenario.hpp"
#include "gpsr/trace.hpp"

namespace gpsr::harness {

enum class Terminal { success, give_up, tick_exhausted };
std::string to_string(Terminal t);

struct ScoreSheet {
  bool transcription_awarded = false;
  int transcription_points = 0;
  double completion_points = 0.0;
  int help_requests = 0;
  double total = 0.0;
  nlohmann::json items = nlohmann::json::array();  // one entry per award or penalty

  nlohmann::json to_json() const;
};

struct EpisodeOptions {
  lm::Backend* backend = nullptr;  // the mock built from the scenario's commonsense table when null
  ScoreRules rules;
  std::optional<std::string> heard_override;  // live sessions: the command as typed/heard
  dialogue::LiveChannel live_operator;        // live sessions: operator answers
  harness::Trace::Listener listener;          // sees every event as it is appended
  bool strict_verdict = false;                // a silent operator means "not completed"
};

struct EpisodeResult {
  Terminal status = Terminal::give_up;
  std::string reason;
  Trace trace;
  std::set<std::string> modes;
  int recoveries = 0;
  ScoreSheet score;
  world::WorldState final_world;
  planner::PromptLedger final_ledger;

  nlohmann::json summary() const;
};

// transcribe -> decompose -> ground -> validate -> execute, with recovery at every stage,
// then the completion check and the score. Never throws for in-episode failures.
EpisodeResult run_episode(const Scenario& scenario, const EpisodeOptions& options = {});

// Scores a finished trace: transcription points when every ground-truth slot appears in the
// spoken-back transcript; completion points times penalty^help on success.
ScoreSheet score_episode(const std::vector<nlohmann::json>& events, const ScoreRules& rules);

struct ExpectationCheck {
  bool pass = true;
  std::vector<std::string> failures;
};

ExpectationCheck check_expectations(const Scenario& scenario, const EpisodeResult& result);

}  // namespace gpsr::harness
