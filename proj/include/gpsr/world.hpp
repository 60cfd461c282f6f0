#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gpsr/error.hpp"

namespace gpsr::world {

inline constexpr int kWorldSchemaVersion = 1;

// Reserved name for the person who gave the command. Usable both as a person and as a
// navigation target ("go to the operator").
inline constexpr const char* kOperator = "operator";

enum class LocationKind { surface, container, door, seat };
enum class DoorState { open, closed, none };
enum class Pose { standing, sitting, lying, raising_arm };

std::string to_string(LocationKind k);
std::string to_string(DoorState s);
std::string to_string(Pose p);
LocationKind location_kind_from(const std::string& s);
DoorState door_state_from(const std::string& s);
Pose pose_from(const std::string& s);
std::optional<Pose> try_pose_from(const std::string& s);

struct Room {
  std::string name;
  std::vector<std::string> connected;
};

struct Location {
  std::string name;
  std::string room;
  LocationKind kind = LocationKind::surface;
  DoorState door_state = DoorState::none;
};

// Where an object is: on/in a Location, in a person's hands, or in the robot gripper.
struct Place {
  enum class Kind { location, person, robot };
  Kind kind = Kind::location;
  std::string ref;  // location or person name; empty for robot

  static Place at(std::string location) { return {Kind::location, std::move(location)}; }
  static Place with_person(std::string person) { return {Kind::person, std::move(person)}; }
  static Place gripper() { return {Kind::robot, {}}; }
  bool operator==(const Place&) const = default;
};

struct ObjectEntity {
  std::string name;
  std::string category;
  std::set<std::string> tags;
  Place place;
};

struct PersonEntity {
  std::string name;
  std::string room;
  Pose pose = Pose::standing;
  std::set<std::string> clothing_tags;
  bool responsive = true;
  std::optional<std::string> script_ref;
};

struct RobotState {
  std::string at;
  std::optional<std::string> holding;
};

struct SemanticEntry {
  std::string location;
  double confidence = 0.0;
};

// The robot's memory of where things are. May disagree with ground truth.
struct SemanticMap {
  std::map<std::string, std::vector<SemanticEntry>> entries;
};

struct WorldState {
  std::vector<Room> rooms;
  std::vector<Location> locations;
  std::vector<ObjectEntity> objects;
  std::vector<PersonEntity> persons;  // includes the operator
  RobotState robot;
  SemanticMap semantic_map;
  long clock = 0;

  const Room* find_room(const std::string& name) const;
  const Location* find_location(const std::string& name) const;
  const ObjectEntity* find_object(const std::string& name) const;
  const PersonEntity* find_person(const std::string& name) const;
  ObjectEntity* find_object(const std::string& name);
  PersonEntity* find_person(const std::string& name);

  bool is_room(const std::string& name) const { return find_room(name) != nullptr; }
  bool is_location(const std::string& name) const { return find_location(name) != nullptr; }

  // Room that contains `place_name` (a room maps to itself). Empty when unknown.
  std::string room_of(const std::string& place_name) const;
  std::string robot_room() const { return room_of(robot.at); }
};

// Parse and validate a world description document. Throws SchemaError naming the
// offending field or ReferenceError for dangling/duplicate names.
WorldState load_world(const nlohmann::json& doc);
WorldState load_world_file(const std::string& path);

// Canonical document form; load_world(to_json(w)) == w.
nlohmann::json to_json(const WorldState& world);
std::string serialize(const WorldState& world);

// Every invariant violation found, empty when the state is consistent.
std::vector<std::string> check_invariants(const WorldState& world);

struct EntityMatch {
  enum class Kind { object, person };
  Kind kind;
  std::string name;
  std::string place;  // location name, person name, "robot", or room for persons
};

// Exact name matches first, then category matches; each group in name order.
std::vector<EntityMatch> locate_entity(const WorldState& world, const std::string& query,
                                       const std::optional<std::string>& room = std::nullopt);

// --- effects ---------------------------------------------------------------

struct MoveRobot { std::string target; };
struct Grasp { std::string object; };
struct ReleaseTo { std::string location; };
struct TransferToPerson { std::string person; };
struct MovePerson { std::string person; std::string room; };
struct SetDoor { std::string location; DoorState state; };
struct MoveObject { std::string object; std::string location; };

using Effect = std::variant<MoveRobot, Grasp, ReleaseTo, TransferToPerson, MovePerson, SetDoor, MoveObject>;

nlohmann::json effect_to_json(const Effect& e);

class IllegalEffect : public Error {
public:
  explicit IllegalEffect(const std::string& message) : Error("ILLEGAL_EFFECT", message) {}
};

// The only way world state changes. Throws IllegalEffect and leaves `world` untouched.
WorldState apply_effect(const WorldState& world, const Effect& effect);

struct RankedLocation {
  std::string location;
  double confidence;
  bool operator==(const RankedLocation&) const = default;
};

// Descending confidence, ties by location name.
std::vector<RankedLocation> semantic_lookup(const SemanticMap& map, const std::string& query);

}  // namespace gpsr::world
