#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpsr/grammar.hpp"
#include "gpsr/world.hpp"

namespace gpsr::grammar {

struct GeneratedCommand {
  std::string text;
  IntentFrame intent;  // what the parser is expected to recover
};

// Seeded random command from `templates`, with slots filled from `world`. Throws
// PreconditionError when the template set is empty or a placeholder cannot be filled.
GeneratedCommand generate_command(const std::vector<Template>& templates, const world::WorldState& world,
                                  std::uint64_t seed);

}  // namespace gpsr::grammar
