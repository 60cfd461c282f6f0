#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gpsr/knowledge.hpp"
#include "gpsr/world.hpp"

// The supported command grammar. One template table drives both the mock parser and the
// seeded command generator, so anything generated is parseable.
namespace gpsr::grammar {

// Form language:
//   word          literal token
//   {slot}        one or more tokens bound to `slot`
//   (a|b c)       alternatives, each a sequence
//   [ ... ]       optional sequence
//   DET           optional determiner (a, an, the, some, my, any, your)
struct FormNode;
using FormSeq = std::vector<FormNode>;

struct FormNode {
  enum class Kind { literal, slot, alt, opt, det };
  Kind kind = Kind::literal;
  std::string text;                // literal word or slot name
  std::vector<FormSeq> children;   // alt: alternatives; opt: exactly one
};

FormSeq parse_form(const std::string& form);

struct Template {
  std::string name;
  std::vector<std::string> forms;
};

// Ordered: earlier templates win when several match.
const std::vector<Template>& command_templates();

struct IntentFrame {
  std::string template_name;
  std::vector<std::string> verb_chain;
  std::map<std::string, std::string> slots;

  nlohmann::json to_json() const;
  static IntentFrame from_json(const nlohmann::json& j);
  bool operator==(const IntentFrame&) const = default;
};

// A template matched the sentence shape but a slot held something the robot does not know.
struct ParseFailure {
  std::string slot;
  std::string kind;  // location, room, person, category, object, pose, operation
  std::string text;
  std::string message;
};

using ParseOutcome = std::variant<IntentFrame, ParseFailure>;

// Lowercased, punctuation-stripped tokens ("Could you bring me the apple?" -> could you ...).
std::vector<std::string> tokenize(const std::string& sentence);
std::vector<std::string> split_sentences(const std::string& command);

ParseOutcome parse_command(const std::string& command, const WorldKnowledge& known);

// Minimal imperative steps for a parsed command, in execution order.
std::vector<std::string> steps_for(const IntentFrame& frame);

// Short imperative description of the whole task ("ask Ashley if she wants dinner").
std::string task_description(const IntentFrame& frame);

// Slot kind checked for a slot name (source/target -> location, and so on).
std::string slot_kind(const std::string& slot);

}  // namespace gpsr::grammar
