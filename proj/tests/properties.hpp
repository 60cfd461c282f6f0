#pragma once

#include <cstdint>
#include <map>
#include <string>

// Seeded property checks shared by the property test suite and the acceptance report.
namespace gpsr::test {

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string first_failure;
  double seconds = 0.0;
  std::map<std::string, int> counts;  // per-rule or per-outcome tallies

  bool pass(int min_cases) const { return failures == 0 && cases >= min_cases; }
};

PropertyResult plan_round_trip(int n, std::uint64_t seed = 1);
// Mutated plans (swap, drop, rename, duplicate) must get exactly the defects an independent
// abstract-state simulation predicts, and every rule must fire at least once.
PropertyResult validator_mutations(int n, std::uint64_t seed = 2);
PropertyResult world_conservation(int n, std::uint64_t seed = 3);
PropertyResult replay_determinism(int n, std::uint64_t seed = 4);
PropertyResult score_monotonicity(int n, std::uint64_t seed = 5);
PropertyResult recovery_termination(int n, std::uint64_t seed = 6);
PropertyResult generator_closure(int n, std::uint64_t seed = 0);

}  // namespace gpsr::test
