#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gpsr/perception.hpp"
#include "gpsr/plan.hpp"
#include "gpsr/speech.hpp"

namespace gpsr::planner {

inline constexpr const char* kMinimalPreamble =
    "You are a helpful assistant for a robot. The robot is in a house. Your mission is to convert natural "
    "language command into a list of sentences. The robot will execute the sentences in order to complete "
    "the task.";

struct WorkedExample {
  std::string command;
  std::vector<std::string> steps;
  std::optional<Plan> plan;
  bool operator==(const WorkedExample&) const = default;
};

// All prompt state of the system. Updated only through update_ledger, which never drops
// content and bumps the version by one.
struct PromptLedger {
  std::string name;
  speech::TranscriptionLexicon transcriber_lexicon;
  std::string planner_preamble = kMinimalPreamble;
  std::vector<std::string> environment_facts;
  std::vector<WorkedExample> worked_examples;
  std::vector<std::string> feedback_lines;
  std::vector<perception::PromptEntry> perception_entries;
  long version = 1;

  bool operator==(const PromptLedger&) const = default;
};

nlohmann::json ledger_to_json(const PromptLedger& ledger);
PromptLedger ledger_from_json(const nlohmann::json& j);
PromptLedger load_ledger_file(const std::string& path);

struct AddLexicon {
  enum class Kind { object, person, location };
  Kind kind = Kind::location;
  std::vector<std::string> phrases;
};
struct AddFeedback { std::string line; };
struct AddPerceptionEntry { perception::PromptEntry entry; };
struct AddEnvironmentFact { std::string line; };

using LedgerUpdate = std::variant<AddLexicon, AddFeedback, AddPerceptionEntry, AddEnvironmentFact>;

nlohmann::json update_to_json(const LedgerUpdate& update);

// Throws PreconditionError for empty updates.
PromptLedger update_ledger(const PromptLedger& ledger, const LedgerUpdate& update);

}  // namespace gpsr::planner
