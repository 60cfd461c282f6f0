#include "gpsr/world.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "gpsr/text.hpp"

namespace gpsr::world {

using nlohmann::json;

std::string to_string(LocationKind k)
{
  switch (k) {
    case LocationKind::surface: return "surface";
    case LocationKind::container: return "container";
    case LocationKind::door: return "door";
    case LocationKind::seat: return "seat";
  }
  return "surface";
}

std::string to_string(DoorState s)
{
  switch (s) {
    case DoorState::open: return "open";
    case DoorState::closed: return "closed";
    case DoorState::none: return "none";
  }
  return "none";
}

std::string to_string(Pose p)
{
  switch (p) {
    case Pose::standing: return "standing";
    case Pose::sitting: return "sitting";
    case Pose::lying: return "lying";
    case Pose::raising_arm: return "raising_arm";
  }
  return "standing";
}

LocationKind location_kind_from(const std::string& s)
{
  if (s == "surface") return LocationKind::surface;
  if (s == "container") return LocationKind::container;
  if (s == "door") return LocationKind::door;
  if (s == "seat") return LocationKind::seat;
  throw SchemaError("locations[].kind: unknown kind '" + s + "'");
}

DoorState door_state_from(const std::string& s)
{
  if (s == "open") return DoorState::open;
  if (s == "closed") return DoorState::closed;
  if (s == "none") return DoorState::none;
  throw SchemaError("locations[].door_state: unknown state '" + s + "'");
}

std::optional<Pose> try_pose_from(const std::string& s)
{
  const auto l = text::to_lower(s);
  if (l == "standing") return Pose::standing;
  if (l == "sitting") return Pose::sitting;
  if (l == "lying") return Pose::lying;
  if (l == "raising_arm" || l == "raising arm" || l == "raising an arm") return Pose::raising_arm;
  return std::nullopt;
}

Pose pose_from(const std::string& s)
{
  if (auto p = try_pose_from(s)) return *p;
  throw SchemaError("persons[].pose: unknown pose '" + s + "'");
}

// --- lookups -----------------------------------------------------------------

namespace {

template <typename Vec>
auto* find_named(Vec& v, const std::string& name)
{
  for (auto& x : v) {
    if (x.name == name) return &x;
  }
  for (auto& x : v) {
    if (text::to_lower(x.name) == text::to_lower(name)) return &x;
  }
  return static_cast<decltype(&v[0])>(nullptr);
}

}  // namespace

const Room* WorldState::find_room(const std::string& name) const { return find_named(rooms, name); }
const Location* WorldState::find_location(const std::string& name) const { return find_named(locations, name); }
const ObjectEntity* WorldState::find_object(const std::string& name) const { return find_named(objects, name); }
const PersonEntity* WorldState::find_person(const std::string& name) const { return find_named(persons, name); }
ObjectEntity* WorldState::find_object(const std::string& name) { return find_named(objects, name); }
PersonEntity* WorldState::find_person(const std::string& name) { return find_named(persons, name); }

std::string WorldState::room_of(const std::string& place_name) const
{
  if (const auto* r = find_room(place_name)) return r->name;
  if (const auto* l = find_location(place_name)) return l->room;
  if (const auto* p = find_person(place_name)) return p->room;
  return {};
}

// --- loading -------------------------------------------------------------------

namespace {

const json& require(const json& obj, const char* field, const std::string& where)
{
  if (!obj.is_object() || !obj.contains(field))
    throw SchemaError(where + "." + field + ": missing field");
  return obj.at(field);
}

std::string require_string(const json& obj, const char* field, const std::string& where)
{
  const auto& v = require(obj, field, where);
  if (!v.is_string() || v.get<std::string>().empty())
    throw SchemaError(where + "." + field + ": expected non-empty string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* field, const std::string& where)
{
  std::vector<std::string> out;
  if (!obj.contains(field)) return out;
  const auto& arr = obj.at(field);
  if (!arr.is_array()) throw SchemaError(where + "." + field + ": expected array");
  for (const auto& v : arr) {
    if (!v.is_string()) throw SchemaError(where + "." + field + ": expected array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

template <typename T>
void check_unique(const std::vector<T>& items, const std::string& kind)
{
  std::set<std::string> seen;
  for (const auto& x : items) {
    if (!seen.insert(text::to_lower(x.name)).second)
      throw ReferenceError("duplicate " + kind + " name '" + x.name + "'");
  }
}

}  // namespace

WorldState load_world(const json& doc)
{
  if (!doc.is_object()) throw SchemaError("world: expected an object");
  const auto& version = require(doc, "schema_version", "world");
  if (!version.is_number_integer() || version.get<int>() != kWorldSchemaVersion)
    throw SchemaError("world.schema_version: unsupported version");

  WorldState w;

  const auto& rooms = require(doc, "rooms", "world");
  if (!rooms.is_array() || rooms.empty()) throw SchemaError("world.rooms: expected non-empty array");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const std::string where = "rooms[" + std::to_string(i) + "]";
    w.rooms.push_back({require_string(rooms[i], "name", where), string_list(rooms[i], "connected", where)});
  }
  check_unique(w.rooms, "room");

  if (doc.contains("locations")) {
    const auto& locs = doc.at("locations");
    if (!locs.is_array()) throw SchemaError("world.locations: expected array");
    for (std::size_t i = 0; i < locs.size(); ++i) {
      const std::string where = "locations[" + std::to_string(i) + "]";
      Location l;
      l.name = require_string(locs[i], "name", where);
      l.room = require_string(locs[i], "room", where);
      l.kind = location_kind_from(locs[i].value("kind", "surface"));
      const std::string default_door = l.kind == LocationKind::door ? "closed" : "none";
      l.door_state = door_state_from(locs[i].value("door_state", default_door));
      w.locations.push_back(std::move(l));
    }
  }
  check_unique(w.locations, "location");

  if (doc.contains("objects")) {
    const auto& objs = doc.at("objects");
    if (!objs.is_array()) throw SchemaError("world.objects: expected array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string where = "objects[" + std::to_string(i) + "]";
      ObjectEntity o;
      o.name = require_string(objs[i], "name", where);
      o.category = require_string(objs[i], "category", where);
      for (auto& t : string_list(objs[i], "tags", where)) o.tags.insert(text::to_lower(t));
      if (objs[i].contains("location")) {
        o.place = Place::at(require_string(objs[i], "location", where));
      } else if (objs[i].contains("held_by")) {
        const auto holder = require_string(objs[i], "held_by", where);
        o.place = holder == "robot" ? Place::gripper() : Place::with_person(holder);
      } else {
        throw SchemaError(where + ".location: missing field (or held_by)");
      }
      w.objects.push_back(std::move(o));
    }
  }
  check_unique(w.objects, "object");

  if (doc.contains("persons")) {
    const auto& ps = doc.at("persons");
    if (!ps.is_array()) throw SchemaError("world.persons: expected array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string where = "persons[" + std::to_string(i) + "]";
      PersonEntity p;
      p.name = require_string(ps[i], "name", where);
      if (text::to_lower(p.name) == kOperator)
        throw SchemaError(where + ".name: 'operator' is reserved; use the operator field");
      p.room = require_string(ps[i], "room", where);
      p.pose = pose_from(ps[i].value("pose", "standing"));
      for (auto& t : string_list(ps[i], "clothing", where)) p.clothing_tags.insert(text::to_lower(t));
      p.responsive = ps[i].value("responsive", true);
      if (ps[i].contains("script") && !ps[i].at("script").is_null())
        p.script_ref = ps[i].at("script").get<std::string>();
      w.persons.push_back(std::move(p));
    }
  }
  const auto& op = require(doc, "operator", "world");
  PersonEntity operator_person;
  operator_person.name = kOperator;
  operator_person.room = require_string(op, "room", "world.operator");
  operator_person.pose = pose_from(op.value("pose", "standing"));
  w.persons.push_back(std::move(operator_person));
  check_unique(w.persons, "person");

  const auto& robot = require(doc, "robot", "world");
  w.robot.at = require_string(robot, "at", "world.robot");
  for (const auto& o : w.objects) {
    if (o.place.kind == Place::Kind::robot) {
      if (w.robot.holding) throw ReferenceError("robot holds more than one object");
      w.robot.holding = o.name;
    }
  }

  if (doc.contains("semantic_map")) {
    const auto& sm = doc.at("semantic_map");
    if (!sm.is_array()) throw SchemaError("world.semantic_map: expected array");
    for (std::size_t i = 0; i < sm.size(); ++i) {
      const std::string where = "semantic_map[" + std::to_string(i) + "]";
      const auto name = require_string(sm[i], "name", where);
      auto& entries = w.semantic_map.entries[name];
      const auto& locs = require(sm[i], "locations", where);
      if (!locs.is_array()) throw SchemaError(where + ".locations: expected array");
      for (std::size_t j = 0; j < locs.size(); ++j) {
        const std::string lw = where + ".locations[" + std::to_string(j) + "]";
        SemanticEntry e;
        e.location = require_string(locs[j], "location", lw);
        const auto& c = require(locs[j], "confidence", lw);
        if (!c.is_number()) throw SchemaError(lw + ".confidence: expected number");
        e.confidence = c.get<double>();
        entries.push_back(std::move(e));
      }
    }
  }
  w.clock = doc.value("clock", 0L);

  // Connectivity is symmetric; accept one-sided declarations and complete them.
  for (const auto& r : w.rooms) {
    for (const auto& c : r.connected) {
      if (!w.find_room(c)) throw ReferenceError("rooms." + r.name + ".connected: unknown room '" + c + "'");
    }
  }
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& r : w.rooms) {
    adj[r.name];
    for (const auto& c : r.connected) {
      const auto cn = w.find_room(c)->name;
      if (cn == r.name) throw ReferenceError("rooms." + r.name + ".connected: self loop");
      adj[r.name].insert(cn);
      adj[cn].insert(r.name);
    }
  }
  for (auto& r : w.rooms) r.connected.assign(adj[r.name].begin(), adj[r.name].end());

  auto problems = check_invariants(w);
  if (!problems.empty()) throw ReferenceError(problems.front());
  return w;
}

WorldState load_world_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open world file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("world file is not valid JSON: ") + e.what());
  }
  return load_world(doc);
}

std::vector<std::string> check_invariants(const WorldState& w)
{
  std::vector<std::string> out;
  for (const auto& r : w.rooms) {
    for (const auto& c : r.connected) {
      const auto* other = w.find_room(c);
      if (!other) {
        out.push_back("room '" + r.name + "' connects to unknown room '" + c + "'");
      } else if (std::find(other->connected.begin(), other->connected.end(), r.name) == other->connected.end()) {
        out.push_back("connectivity between '" + r.name + "' and '" + c + "' is not symmetric");
      }
    }
  }
  for (const auto& l : w.locations) {
    if (!w.find_room(l.room)) out.push_back("location '" + l.name + "' in unknown room '" + l.room + "'");
    if (w.find_room(l.name)) out.push_back("location '" + l.name + "' shadows a room name");
    if (l.door_state != DoorState::none && l.kind != LocationKind::door)
      out.push_back("location '" + l.name + "' has a door state but is not a door");
  }
  std::size_t in_gripper = 0;
  for (const auto& o : w.objects) {
    if (o.tags.empty()) out.push_back("object '" + o.name + "' has no tags");
    if (text::to_lower(o.name) == text::to_lower(o.category))
      out.push_back("object '" + o.name + "' has the same name as its category");
    switch (o.place.kind) {
      case Place::Kind::location:
        if (!w.find_location(o.place.ref))
          out.push_back("object '" + o.name + "' placed on unknown location '" + o.place.ref + "'");
        break;
      case Place::Kind::person:
        if (!w.find_person(o.place.ref))
          out.push_back("object '" + o.name + "' held by unknown person '" + o.place.ref + "'");
        break;
      case Place::Kind::robot:
        ++in_gripper;
        if (w.robot.holding != o.name) out.push_back("object '" + o.name + "' in gripper but robot.holding disagrees");
        break;
    }
  }
  if (in_gripper > 1) out.push_back("more than one object in the gripper");
  if (w.robot.holding) {
    const auto* o = w.find_object(*w.robot.holding);
    if (!o) out.push_back("robot holds unknown object '" + *w.robot.holding + "'");
    else if (o->place.kind != Place::Kind::robot) out.push_back("robot.holding refers to an object not in the gripper");
  }
  for (const auto& p : w.persons) {
    if (!w.find_room(p.room)) out.push_back("person '" + p.name + "' in unknown room '" + p.room + "'");
  }
  if (!w.is_room(w.robot.at) && !w.is_location(w.robot.at))
    out.push_back("robot at unknown place '" + w.robot.at + "'");
  for (const auto& [name, entries] : w.semantic_map.entries) {
    for (const auto& e : entries) {
      if (e.confidence < 0.0 || e.confidence > 1.0)
        out.push_back("semantic_map." + name + ": confidence outside [0,1]");
      if (!w.is_location(e.location) && !w.is_room(e.location))
        out.push_back("semantic_map." + name + ": unknown location '" + e.location + "'");
    }
  }
  return out;
}

json to_json(const WorldState& w)
{
  json doc = json::object();
  doc["schema_version"] = kWorldSchemaVersion;
  doc["clock"] = w.clock;
  json rooms = json::array();
  for (const auto& r : w.rooms) rooms.push_back({{"name", r.name}, {"connected", r.connected}});
  doc["rooms"] = rooms;
  json locs = json::array();
  for (const auto& l : w.locations) {
    locs.push_back({{"name", l.name}, {"room", l.room}, {"kind", to_string(l.kind)}, {"door_state", to_string(l.door_state)}});
  }
  doc["locations"] = locs;
  json objs = json::array();
  for (const auto& o : w.objects) {
    json j = {{"name", o.name}, {"category", o.category}, {"tags", o.tags}};
    switch (o.place.kind) {
      case Place::Kind::location: j["location"] = o.place.ref; break;
      case Place::Kind::person: j["held_by"] = o.place.ref; break;
      case Place::Kind::robot: j["held_by"] = "robot"; break;
    }
    objs.push_back(std::move(j));
  }
  doc["objects"] = objs;
  json persons = json::array();
  for (const auto& p : w.persons) {
    if (p.name == kOperator) {
      doc["operator"] = {{"room", p.room}, {"pose", to_string(p.pose)}};
      continue;
    }
    json j = {{"name", p.name}, {"room", p.room}, {"pose", to_string(p.pose)},
              {"clothing", p.clothing_tags}, {"responsive", p.responsive}};
    j["script"] = p.script_ref ? json(*p.script_ref) : json(nullptr);
    persons.push_back(std::move(j));
  }
  doc["persons"] = persons;
  doc["robot"] = {{"at", w.robot.at}};
  json sm = json::array();
  for (const auto& [name, entries] : w.semantic_map.entries) {
    json locs_j = json::array();
    for (const auto& e : entries) locs_j.push_back({{"location", e.location}, {"confidence", e.confidence}});
    sm.push_back({{"name", name}, {"locations", locs_j}});
  }
  doc["semantic_map"] = sm;
  return doc;
}

std::string serialize(const WorldState& world) { return to_json(world).dump(); }

// --- queries -------------------------------------------------------------------

namespace {

std::string object_room(const WorldState& w, const ObjectEntity& o)
{
  switch (o.place.kind) {
    case Place::Kind::location: return w.room_of(o.place.ref);
    case Place::Kind::person: return w.room_of(o.place.ref);
    case Place::Kind::robot: return w.robot_room();
  }
  return {};
}

std::string object_place(const ObjectEntity& o)
{
  return o.place.kind == Place::Kind::robot ? std::string("robot") : o.place.ref;
}

}  // namespace

std::vector<EntityMatch> locate_entity(const WorldState& w, const std::string& query,
                                       const std::optional<std::string>& room)
{
  const auto q = text::to_lower(query);
  const auto in_scope = [&](const std::string& r) {
    return !room || text::to_lower(r) == text::to_lower(*room);
  };
  std::vector<EntityMatch> exact, by_category;
  for (const auto& o : w.objects) {
    if (!in_scope(object_room(w, o))) continue;
    if (text::to_lower(o.name) == q) exact.push_back({EntityMatch::Kind::object, o.name, object_place(o)});
    else if (text::to_lower(o.category) == q)
      by_category.push_back({EntityMatch::Kind::object, o.name, object_place(o)});
  }
  for (const auto& p : w.persons) {
    if (in_scope(p.room) && text::to_lower(p.name) == q) exact.push_back({EntityMatch::Kind::person, p.name, p.room});
  }
  const auto by_name = [](const EntityMatch& a, const EntityMatch& b) { return a.name < b.name; };
  std::sort(exact.begin(), exact.end(), by_name);
  std::sort(by_category.begin(), by_category.end(), by_name);
  exact.insert(exact.end(), by_category.begin(), by_category.end());
  return exact;
}

// --- effects -------------------------------------------------------------------

json effect_to_json(const Effect& e)
{
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MoveRobot>) return {{"effect", "move_robot"}, {"target", x.target}};
        else if constexpr (std::is_same_v<T, Grasp>) return {{"effect", "grasp"}, {"object", x.object}};
        else if constexpr (std::is_same_v<T, ReleaseTo>) return {{"effect", "release_to"}, {"location", x.location}};
        else if constexpr (std::is_same_v<T, TransferToPerson>)
          return {{"effect", "transfer_to_person"}, {"person", x.person}};
        else if constexpr (std::is_same_v<T, MovePerson>)
          return {{"effect", "move_person"}, {"person", x.person}, {"room", x.room}};
        else if constexpr (std::is_same_v<T, SetDoor>)
          return {{"effect", "set_door"}, {"location", x.location}, {"state", to_string(x.state)}};
        else return {{"effect", "move_object"}, {"object", x.object}, {"location", x.location}};
      },
      e);
}

WorldState apply_effect(const WorldState& world, const Effect& effect)
{
  WorldState w = world;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MoveRobot>) {
          if (!w.is_room(x.target) && !w.is_location(x.target))
            throw IllegalEffect("move_robot: unknown target '" + x.target + "'");
          w.robot.at = w.is_room(x.target) ? w.find_room(x.target)->name : w.find_location(x.target)->name;
        } else if constexpr (std::is_same_v<T, Grasp>) {
          if (w.robot.holding) throw IllegalEffect("grasp: gripper already holds '" + *w.robot.holding + "'");
          auto* o = w.find_object(x.object);
          if (!o) throw IllegalEffect("grasp: unknown object '" + x.object + "'");
          o->place = Place::gripper();
          w.robot.holding = o->name;
        } else if constexpr (std::is_same_v<T, ReleaseTo>) {
          if (!w.robot.holding) throw IllegalEffect("release_to: gripper is empty");
          const auto* l = w.find_location(x.location);
          if (!l) throw IllegalEffect("release_to: unknown location '" + x.location + "'");
          w.find_object(*w.robot.holding)->place = Place::at(l->name);
          w.robot.holding.reset();
        } else if constexpr (std::is_same_v<T, TransferToPerson>) {
          if (!w.robot.holding) throw IllegalEffect("transfer_to_person: gripper is empty");
          const auto* p = w.find_person(x.person);
          if (!p) throw IllegalEffect("transfer_to_person: unknown person '" + x.person + "'");
          w.find_object(*w.robot.holding)->place = Place::with_person(p->name);
          w.robot.holding.reset();
        } else if constexpr (std::is_same_v<T, MovePerson>) {
          auto* p = w.find_person(x.person);
          if (!p) throw IllegalEffect("move_person: unknown person '" + x.person + "'");
          const auto* r = w.find_room(x.room);
          if (!r) throw IllegalEffect("move_person: unknown room '" + x.room + "'");
          p->room = r->name;
        } else if constexpr (std::is_same_v<T, SetDoor>) {
          const auto* l = w.find_location(x.location);
          if (!l) throw IllegalEffect("set_door: unknown location '" + x.location + "'");
          if (l->kind != LocationKind::door) throw IllegalEffect("set_door: '" + l->name + "' is not a door");
          if (x.state == DoorState::none) throw IllegalEffect("set_door: state must be open or closed");
          for (auto& loc : w.locations) {
            if (loc.name == l->name) loc.door_state = x.state;
          }
        } else {
          auto* o = w.find_object(x.object);
          if (!o) throw IllegalEffect("move_object: unknown object '" + x.object + "'");
          if (o->place.kind == Place::Kind::robot) throw IllegalEffect("move_object: object is in the gripper");
          const auto* l = w.find_location(x.location);
          if (!l) throw IllegalEffect("move_object: unknown location '" + x.location + "'");
          o->place = Place::at(l->name);
        }
      },
      effect);
  w.clock += 1;
  return w;
}

std::vector<RankedLocation> semantic_lookup(const SemanticMap& map, const std::string& query)
{
  std::vector<RankedLocation> out;
  auto it = map.entries.find(query);
  if (it == map.entries.end()) {
    for (auto i = map.entries.begin(); i != map.entries.end(); ++i) {
      if (text::to_lower(i->first) == text::to_lower(query)) {
        it = i;
        break;
      }
    }
  }
  if (it == map.entries.end()) return out;
  for (const auto& e : it->second) out.push_back({e.location, e.confidence});
  std::sort(out.begin(), out.end(), [](const RankedLocation& a, const RankedLocation& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.location < b.location;
  });
  return out;
}

}  // namespace gpsr::world
