#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gpsr/world.hpp"

namespace gpsr {

// Category -> likely rooms, and object name -> category. Shipped as data/commonsense.json.
struct CommonsenseTable {
  std::map<std::string, std::vector<std::string>> category_rooms;
  std::map<std::string, std::string> object_categories;

  static CommonsenseTable from_json(const nlohmann::json& j);
  static CommonsenseTable load(const std::string& path);
  nlohmann::json to_json() const;
};

// What the robot knows about its environment when planning: the map (rooms, locations),
// person names, and whatever object locations it has remembered or learned.
struct WorldKnowledge {
  std::set<std::string> rooms;
  std::map<std::string, std::string> location_rooms;  // location -> room
  std::map<std::string, std::set<std::string>> adjacency;
  std::set<std::string> persons;  // includes the operator
  std::map<std::string, std::string> object_locations;
  std::map<std::string, std::string> object_categories;
  std::set<std::string> categories;

  // Canonical spelling of a name, matched case-insensitively.
  std::optional<std::string> room(const std::string& name) const;
  std::optional<std::string> location(const std::string& name) const;
  std::optional<std::string> place(const std::string& name) const;  // room or location
  std::optional<std::string> person(const std::string& name) const;
  std::optional<std::string> category(const std::string& name) const;

  std::optional<std::string> category_of(const std::string& object) const;
  std::optional<std::string> location_of(const std::string& object) const;
  // First remembered object of `category` (by name) with a known location.
  std::optional<std::string> object_of_category(const std::string& category) const;
  std::string room_of(const std::string& place) const;

  std::vector<std::string> place_names() const;  // locations then rooms, sorted

  nlohmann::json to_json() const;
  static WorldKnowledge from_json(const nlohmann::json& j);
};

// The robot's initial knowledge of `world`: the full map, persons, catalogue categories,
// and object locations taken from the top semantic-map entry.
WorldKnowledge knowledge_from_world(const world::WorldState& world, const CommonsenseTable& commonsense);

}  // namespace gpsr
