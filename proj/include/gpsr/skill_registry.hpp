#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gpsr::skills {

enum class Collaborator { world, perception, dialogue, backend };

struct SkillSpec {
  std::string name;
  std::vector<std::string> required;
  std::vector<std::string> optional;
  std::vector<Collaborator> collaborators;
  std::string effect;  // one-line summary of the world effect
};

// The 21 skill functions, in catalogue order.
const std::vector<SkillSpec>& registry();
const SkillSpec* find_skill(const std::string& name);

// Empty when `args` matches the signature of `function` exactly (all required present,
// optionals allowed, nothing else). Otherwise a description of the mismatch.
std::optional<std::string> signature_error(const std::string& function,
                                           const std::map<std::string, std::string>& args);

}  // namespace gpsr::skills
