#include <doctest.h>

#include <string>

#include "properties.hpp"

using gpsr::test::PropertyResult;

namespace {

void check(const PropertyResult& r)
{
  INFO(r.name << ": " << r.cases << " cases, " << r.failures << " failures, " << r.seconds << " s");
  INFO("first failure: " << r.first_failure);
  std::string tally;
  for (const auto& [k, v] : r.counts) tally += k + "=" + std::to_string(v) + " ";
  MESSAGE(r.name << ": " << tally);
  CHECK(r.pass(1000));
  CHECK(r.seconds < 60.0);
}

}  // namespace

TEST_CASE("property: plans survive serialization") { check(gpsr::test::plan_round_trip(1000)); }
TEST_CASE("property: validator agrees with the reference simulation") { check(gpsr::test::validator_mutations(1000)); }
TEST_CASE("property: effects conserve objects and invariants") { check(gpsr::test::world_conservation(1000)); }
TEST_CASE("property: episodes replay byte for byte") { check(gpsr::test::replay_determinism(1000)); }
TEST_CASE("property: help and failure never raise the score") { check(gpsr::test::score_monotonicity(1000)); }
TEST_CASE("property: recovery always terminates within budget") { check(gpsr::test::recovery_termination(1000)); }
TEST_CASE("property: generated commands always decompose") { check(gpsr::test::generator_closure(1000)); }
