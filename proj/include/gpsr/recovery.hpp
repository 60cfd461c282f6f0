#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <variant>
#include <vector>

#include "gpsr/knowledge.hpp"
#include "gpsr/plan.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/skills.hpp"

namespace gpsr::recovery {

// M1 missing information, M2 wrong plan, M3 execution failure.
enum class Mode { M1, M2, M3 };
std::string to_string(Mode m);
Mode mode_from(const std::string& s);

struct GroundingEvidence {
  std::size_t step = 0;
  planner::GroundingReason reason = planner::GroundingReason::AMBIGUOUS_STEP;
  std::string name;
  bool from_speech = false;  // the unknown term came out of the transcript
};
struct ParseEvidence {
  std::string command;
  std::string slot, kind, text;
};
struct VerdictEvidence {
  std::string feedback;
};
struct SkillEvidence {
  planner::SkillCall call;
  skills::SkillResult result;
};
struct PlanDefectEvidence {
  planner::ValidationReport report;
};

using Evidence = std::variant<GroundingEvidence, ParseEvidence, VerdictEvidence, SkillEvidence, PlanDefectEvidence>;

nlohmann::json evidence_to_json(const Evidence& e);

// Unknown object location -> M1. Unknown place/person -> M1, or M2 when the name came from a
// transcript that correction could not fix. Parse failures, plan defects, ambiguous steps and
// negative verdicts -> M2. Skill failures -> M3.
Mode classify_failure(const Evidence& e);

struct FailureEvent {
  Mode mode;
  Evidence evidence;
  long tick = 0;
  nlohmann::json to_json() const;
};

enum class ActionKind {
  ASK_OPERATOR_REPHRASE,
  ASK_LOCATION,
  SUGGEST_AND_VISIT,
  RETRY_SKILL,
  ALTERNATIVE_STEPS,
  UPDATE_LEDGER_AND_REPLAN,
  GIVE_UP
};
std::string to_string(ActionKind k);

struct RecoveryAction {
  ActionKind kind = ActionKind::GIVE_UP;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json to_json() const;
};

struct RecoveryBudget {
  int max_skill_retries = 2;
  int max_replans = 2;
  int max_operator_queries = 3;
  int max_suggestions = 3;  // candidate places visited per SUGGEST_AND_VISIT

  static RecoveryBudget from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Progress of the recovery for the failure being handled, plus episode-wide spend.
struct RecoveryState {
  int retries_for_call = 0;   // RETRY_SKILL already spent on the failing call
  int replans_used = 0;       // SUGGEST_AND_VISIT, ALTERNATIVE_STEPS, UPDATE_LEDGER_AND_REPLAN
  int operator_queries_used = 0;  // ASK_LOCATION, ASK_OPERATOR_REPHRASE
  bool location_asked = false;    // ASK_LOCATION done for this object
  bool suggestions_pending = false;  // ASK_LOCATION came back with candidates to visit
  bool rephrased = false;            // the operator already rephrased for this failure
};

// True for a find of an object or category that came back NOT_FOUND; such failures
// escalate to an M1 location search once retries are spent.
bool is_object_search_miss(const SkillEvidence& e);

// The next action for `event` given what has been tried. Pure: same inputs, same action.
RecoveryAction recover(const FailureEvent& event, const RecoveryState& state, const RecoveryBudget& budget);

struct RecoveryPromptContext {
  std::string task_content;
  std::string failed_action;
  std::string robot_at;
};

// Throws PreconditionError when any field is empty.
std::string render_recovery_prompt(const RecoveryPromptContext& ctx);

// "find Ashley", "pick the apple" for the prompt's failed_action slot.
std::string action_phrase(const planner::SkillCall& call);

class SpliceRejected : public Error {
public:
  SpliceRejected(const std::string& message, planner::ValidationReport report)
      : Error("SPLICE_REJECTED", message), report(std::move(report))
  {
  }
  planner::ValidationReport report;
};

// calls[at] replaced by `replacement`, suffix kept. Throws PreconditionError for a bad
// index and SpliceRejected when the result from `at` on does not validate.
planner::Plan splice_plan(const planner::Plan& plan, std::size_t at, const std::vector<planner::SkillCall>& replacement,
                          const WorldKnowledge& known);

}  // namespace gpsr::recovery
