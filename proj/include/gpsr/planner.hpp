#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gpsr/backend.hpp"
#include "gpsr/knowledge.hpp"
#include "gpsr/ledger.hpp"
#include "gpsr/plan.hpp"

namespace gpsr::planner {

// Backend plus an observer that sees every exchange (the episode uses it for the trace).
struct BackendLink {
  lm::Backend& backend;
  std::function<void(const lm::BackendRequest&, const lm::BackendResponse&)> observer;
};

// Renders the prompt, calls the backend, reports to the observer, and checks the result
// shape of successful responses. Transport errors propagate.
lm::BackendResponse exchange(const BackendLink& link, const PromptLedger& ledger, lm::RequestKind kind,
                             const nlohmann::json& payload);

struct Decomposition {
  std::vector<PlanStep> steps;
  nlohmann::json frame;  // the backend's parse of the command, when it reports one
  std::string task;      // short task description for recovery prompts
};

struct CannotParse {
  std::string message;
  std::string slot;
  std::string kind;
  std::string text;  // the offending phrase
};

using DecomposeOutcome = std::variant<Decomposition, CannotParse>;

DecomposeOutcome decompose(const std::string& command, const PromptLedger& ledger, const BackendLink& link,
                           const WorldKnowledge& known);

enum class GroundingReason { AMBIGUOUS_STEP, UNKNOWN_LOCATION, UNKNOWN_PERSON, UNKNOWN_OBJECT_LOCATION };
std::string to_string(GroundingReason r);

struct GroundingFailure {
  std::size_t step = 0;
  GroundingReason reason = GroundingReason::AMBIGUOUS_STEP;
  std::string name;  // the unknown name or the ambiguous sentence
  std::string message;
  bool category = false;  // UNKNOWN_OBJECT_LOCATION for a category ("any fruit")
};

using GroundOutcome = std::variant<Plan, GroundingFailure>;

// `start` is where the robot is when the steps begin (used for calls that need the
// current location before any move step).
GroundOutcome ground(const std::vector<PlanStep>& steps, const PromptLedger& ledger, const BackendLink& link,
                     const WorldKnowledge& known, const std::optional<std::string>& start = std::nullopt,
                     const std::string& source_command = "");

// Argument names whose values must be known places / persons.
bool is_location_arg(const std::string& function, const std::string& arg);
bool is_person_arg(const std::string& function, const std::string& arg);

enum class DefectCode {
  FIND_BEFORE_NAV,
  GRASP_BEFORE_FIND,
  GRASP_WHILE_HOLDING,
  PLACE_WITHOUT_HOLDING,
  UNKNOWN_LOCATION,
  UNKNOWN_SKILL,
  AMBIGUOUS_STEP
};
std::string to_string(DefectCode c);

struct Defect {
  DefectCode code;
  std::size_t index;  // call index; step index for AMBIGUOUS_STEP
  std::string message;
  bool operator==(const Defect&) const = default;
};

struct ValidationReport {
  std::vector<Defect> defects;
  bool pass() const { return defects.empty(); }
  nlohmann::json to_json() const;
};

// Abstract simulation of position, gripper and what has been found.
ValidationReport validate_plan(const Plan& plan, const WorldKnowledge& known);

// Grounds the steps one sentence at a time, recording AMBIGUOUS_STEP for sentences that map
// to nothing, then validates whatever did ground. Used to audit a step list as a whole.
ValidationReport validate_steps(const std::vector<std::string>& steps, const PromptLedger& ledger,
                                const BackendLink& link, const WorldKnowledge& known);

}  // namespace gpsr::planner
