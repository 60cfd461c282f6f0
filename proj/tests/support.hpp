#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "gpsr/knowledge.hpp"
#include "gpsr/ledger.hpp"
#include "gpsr/mock_backend.hpp"
#include "gpsr/world.hpp"

#ifndef GPSR_TEST_DATA_DIR
#error "GPSR_TEST_DATA_DIR must point at the data directory"
#endif

namespace gpsr::test {

inline std::string data_path(const std::string& rel) { return std::string(GPSR_TEST_DATA_DIR) + "/" + rel; }

inline nlohmann::json read_json(const std::string& rel)
{
  std::ifstream in(data_path(rel));
  return nlohmann::json::parse(in);
}

inline world::WorldState household() { return world::load_world_file(data_path("worlds/household.json")); }
inline CommonsenseTable commonsense() { return CommonsenseTable::load(data_path("commonsense.json")); }
inline WorldKnowledge household_knowledge() { return knowledge_from_world(household(), commonsense()); }
inline planner::PromptLedger ledger(const std::string& name)
{
  return planner::load_ledger_file(data_path("ledgers/" + name + ".json"));
}

// The skill table as printed in the source: name, required args, optional args.
struct SkillRow {
  std::string name;
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

inline const std::vector<SkillRow>& skill_table()
{
  static const std::vector<SkillRow> rows = {
      {"go_to_location", {"location"}, {}},
      {"ask_location", {"object"}, {}},
      {"find_concrete_name_objects", {"object"}, {"room"}},
      {"find_category_name_objects", {"category"}, {"room"}},
      {"count_concrete_name_objects", {"objects"}, {}},
      {"count_category_name_objects", {"category"}, {}},
      {"find_person", {"person"}, {}},
      {"detect_person_pose", {"person"}, {}},
      {"find_specific_pose_person", {"person", "pose"}, {}},
      {"count_specific_pose_person", {"person", "pose"}, {}},
      {"count_person", {}, {}},
      {"follow_person", {"person"}, {"location"}},
      {"guide", {"person", "location"}, {}},
      {"pick", {"object", "location"}, {}},
      {"hand_over", {"object", "person"}, {}},
      {"ask_person_to_hand_over", {"object", "person", "query"}, {}},
      {"place", {"object", "location"}, {}},
      {"ask_question", {"person", "question"}, {}},
      {"answer_question", {}, {"person"}},
      {"tell_information", {"information", "person"}, {}},
      {"operate_door", {"location", "operation"}, {}},
  };
  return rows;
}

// Jaccard by brute force, independent of the library helper.
template <typename A, typename B>
double jaccard_oracle(const A& a, const B& b)
{
  std::size_t inter = 0;
  std::vector<std::string> uni(a.begin(), a.end());
  for (const auto& x : b) {
    bool seen = false;
    for (const auto& y : a) seen = seen || (x == y);
    if (seen) ++inter; else uni.push_back(x);
  }
  return uni.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni.size());
}

}  // namespace gpsr::test
