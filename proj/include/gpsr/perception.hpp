#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gpsr/world.hpp"

namespace gpsr::perception {

// A text prompt describing one object class; tags are the description's content words.
struct PromptEntry {
  std::string label;
  std::string text;
  std::set<std::string> tags;

  static PromptEntry make(std::string label, std::string text);
  nlohmann::json to_json() const;
  static PromptEntry from_json(const nlohmann::json& j);
  bool operator==(const PromptEntry&) const = default;
};

struct ClosedVocabulary {
  std::set<std::string> classes;  // category names
};

struct OpenVocabulary {
  std::vector<PromptEntry> entries;
};

using VocabularyMode = std::variant<ClosedVocabulary, OpenVocabulary>;

struct Detection {
  std::string entity_ref;  // ground truth, used only by the simulator and tests
  std::set<std::string> observed_tags;
  std::string proposed_label;
};

// Deterministic perception noise. Also carries the person-hiding rule used for M3 tests.
struct NoiseConfig {
  std::set<std::string> drop_objects;
  std::map<std::string, std::set<std::string>> distractor_tags;
  std::set<std::string> hidden_persons;
  double drop_rate = 0.0;
  std::uint64_t seed = 0;

  static NoiseConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DetectorConfig {
  double detection_threshold = 0.25;
};

// Objects visible at `at` (a location, or the robot's current room to sweep the room).
std::vector<Detection> detect_objects(const world::WorldState& world, const std::string& at,
                                      const VocabularyMode& mode, const NoiseConfig& noise = {},
                                      const DetectorConfig& config = {});

struct Classification {
  std::string label;
  double score = 0.0;
  bool operator==(const Classification&) const = default;
};

// Argmax tag Jaccard over entries; ties go to the lexicographically smaller label.
Classification classify_detection(const Detection& detection, const std::vector<PromptEntry>& entries);

struct PersonFilter {
  std::optional<world::Pose> pose;
  std::set<std::string> clothing;
};

std::vector<std::pair<std::string, world::Pose>> perceive_persons(const world::WorldState& world,
                                                                  const std::string& room,
                                                                  const PersonFilter& filter = {},
                                                                  const NoiseConfig& noise = {});

// Entries in insertion order; a later entry with the same label supersedes an earlier one.
std::vector<PromptEntry> effective_entries(const std::vector<PromptEntry>& entries);

}  // namespace gpsr::perception
