#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpsr/dialogue.hpp"
#include "gpsr/knowledge.hpp"
#include "gpsr/ledger.hpp"
#include "gpsr/perception.hpp"
#include "gpsr/plan.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/trace.hpp"
#include "gpsr/world.hpp"

namespace gpsr::skills {

enum class FailureReason { NOT_FOUND, NO_RESPONSE, GRASP_FAILED, NAV_FAILED, DOOR_STUCK, PRECONDITION, INJECTED };
std::string to_string(FailureReason r);
FailureReason failure_reason_from(const std::string& s);

struct SkillResult {
  bool success = true;
  std::optional<FailureReason> reason;
  std::string message;
  nlohmann::json observations = nlohmann::json::object();
  std::vector<world::Effect> effects;

  nlohmann::json to_json() const;
};

enum class InjectionBehavior { fail_once, fail_n, fail_always };

struct InjectionRule {
  std::string skill;
  std::map<std::string, std::string> match;  // argument -> value ("*" matches anything)
  InjectionBehavior behavior = InjectionBehavior::fail_once;
  int n = 1;
  FailureReason reason = FailureReason::INJECTED;
};

struct FailureInjection {
  std::vector<InjectionRule> rules;
  static FailureInjection from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Everything a skill may touch during one episode. Owned by the episode runner.
struct Context {
  Context(world::WorldState w, planner::PromptLedger l, WorldKnowledge k, planner::BackendLink b,
          dialogue::Dialogue d, harness::Trace& t)
      : world(std::move(w)), ledger(std::move(l)), knowledge(std::move(k)), link(std::move(b)),
        dialogue(std::move(d)), trace(t)
  {
  }

  world::WorldState world;
  planner::PromptLedger ledger;
  WorldKnowledge knowledge;
  planner::BackendLink link;
  dialogue::Dialogue dialogue;
  harness::Trace& trace;

  perception::NoiseConfig noise;
  perception::DetectorConfig detector;
  FailureInjection injection;
  std::vector<int> injection_fired;

  long tick = 0;
  std::map<std::string, std::string> bindings;  // label used in the plan -> entity it resolved to
  std::optional<std::string> hint_person;       // "Ashley might know where it is"
  std::vector<std::string> facts;               // what the robot has observed, for answers
  int help_requests = 0;
};

// Replaces the active rules and resets their counters. Throws PreconditionError naming an
// unknown skill.
void inject(Context& ctx, const FailureInjection& rules);

struct ExecOptions {
  bool exploratory = false;  // part of a recovery search; recorded as such in the trace
};

// Runs one call: 1 tick, injection first, then the simulated skill. Effects are applied only
// on success. The result is appended to the trace.
SkillResult execute_skill(Context& ctx, const planner::SkillCall& call, const ExecOptions& options = {});

// Asks `addressee` and records the turn. Operator questions count as help when `help` is set.
dialogue::DialogueTurn ask(Context& ctx, const std::string& addressee, const std::string& question, bool help = false);

// Records a robot utterance.
void say(Context& ctx, const std::string& text, const std::string& to = world::kOperator);

}  // namespace gpsr::skills
