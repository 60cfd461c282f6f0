#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpsr/ledger.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/world.hpp"

namespace gpsr::dialogue {

struct ScriptTurn {
  std::string match;                  // case-insensitive substring of the question
  std::optional<std::string> answer;  // nullopt: no response
  std::optional<int> times;           // how often this turn may fire; unlimited when absent
};

enum class ScriptDefault { no_response, echo };

// Deterministic stand-in for a person's answers. First matching turn wins.
struct OperatorScript {
  std::vector<ScriptTurn> turns;
  ScriptDefault fallback = ScriptDefault::no_response;

  static OperatorScript from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DialogueTurn {
  long tick = 0;
  std::string speaker;
  std::string addressee;
  std::string question;
  std::optional<std::string> text;            // what was heard; nullopt for no response
  std::optional<std::string> corrected_text;  // after transcription with the current lexicon
  long lexicon_version = 0;
  std::string source;  // script, live, unresponsive

  bool no_response() const { return !text.has_value(); }
  nlohmann::json to_json() const;
};

// Blocks until the operator answers `question` or gives up (nullopt).
using LiveChannel = std::function<std::optional<std::string>(const std::string& question)>;

class Dialogue {
public:
  Dialogue() = default;
  // Scripts keyed by person name or script reference; the operator's key is "operator".
  explicit Dialogue(std::map<std::string, OperatorScript> scripts);

  void set_live_operator(LiveChannel channel) { live_ = std::move(channel); }
  bool live() const { return static_cast<bool>(live_); }

  // Throws PreconditionError when `addressee` is not a person in `world`.
  DialogueTurn ask(const world::WorldState& world, const std::string& addressee, const std::string& question,
                   const planner::PromptLedger& ledger, long tick);

private:
  std::map<std::string, OperatorScript> scripts_;
  std::map<std::pair<std::string, std::size_t>, int> used_;
  LiveChannel live_;
};

// Known name mentioned in `answer`, via the backend's EXTRACT_SLOT. Throws PreconditionError
// for an empty answer.
std::optional<std::string> extract_slot(const std::string& answer, const std::string& kind,
                                        const std::vector<std::string>& known, const planner::PromptLedger& ledger,
                                        const planner::BackendLink& link);

inline constexpr const char* kCompletionQuestion = "Did I complete the task?";

struct Verdict {
  bool completed = true;
  std::string feedback;
  bool no_response = false;
};

// "no, that's the wrong fruit" -> not completed; no answer -> completed unless strict.
Verdict verdict_from_answer(const std::optional<std::string>& answer, bool strict = false);

}  // namespace gpsr::dialogue
