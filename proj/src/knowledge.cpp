#include "gpsr/knowledge.hpp"

#include <fstream>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr {

using nlohmann::json;

CommonsenseTable CommonsenseTable::from_json(const json& j)
{
  if (!j.is_object()) throw SchemaError("commonsense: expected object");
  CommonsenseTable t;
  if (j.contains("category_rooms")) {
    for (const auto& [cat, rooms] : j.at("category_rooms").items())
      t.category_rooms[cat] = rooms.get<std::vector<std::string>>();
  }
  if (j.contains("object_categories")) {
    for (const auto& [obj, cat] : j.at("object_categories").items()) t.object_categories[obj] = cat.get<std::string>();
  }
  return t;
}

CommonsenseTable CommonsenseTable::load(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open commonsense table '" + path + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("commonsense table: ") + e.what());
  }
}

json CommonsenseTable::to_json() const
{
  return {{"category_rooms", category_rooms}, {"object_categories", object_categories}};
}

namespace {

template <typename Container>
std::optional<std::string> find_ci(const Container& names, const std::string& name)
{
  const auto l = text::to_lower(text::trim(name));
  for (const auto& n : names) {
    if (text::to_lower(n) == l) return n;
  }
  return std::nullopt;
}

template <typename Map>
std::optional<std::string> lookup_ci(const Map& m, const std::string& key)
{
  if (auto it = m.find(key); it != m.end()) return it->second;
  const auto l = text::to_lower(key);
  for (const auto& [k, v] : m) {
    if (text::to_lower(k) == l) return v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> WorldKnowledge::room(const std::string& name) const { return find_ci(rooms, name); }

std::optional<std::string> WorldKnowledge::location(const std::string& name) const
{
  const auto l = text::to_lower(text::trim(name));
  for (const auto& [loc, r] : location_rooms) {
    if (text::to_lower(loc) == l) return loc;
  }
  return std::nullopt;
}

std::optional<std::string> WorldKnowledge::place(const std::string& name) const
{
  if (auto l = location(name)) return l;
  return room(name);
}

std::optional<std::string> WorldKnowledge::person(const std::string& name) const { return find_ci(persons, name); }
std::optional<std::string> WorldKnowledge::category(const std::string& name) const { return find_ci(categories, name); }

std::optional<std::string> WorldKnowledge::category_of(const std::string& object) const
{
  return lookup_ci(object_categories, object);
}

std::optional<std::string> WorldKnowledge::location_of(const std::string& object) const
{
  return lookup_ci(object_locations, object);
}

std::optional<std::string> WorldKnowledge::object_of_category(const std::string& cat) const
{
  for (const auto& [obj, loc] : object_locations) {
    auto c = category_of(obj);
    if (c && text::to_lower(*c) == text::to_lower(cat)) return obj;
  }
  return std::nullopt;
}

std::string WorldKnowledge::room_of(const std::string& p) const
{
  if (auto r = room(p)) return *r;
  if (auto l = location(p)) return location_rooms.at(*l);
  return {};
}

std::vector<std::string> WorldKnowledge::place_names() const
{
  std::vector<std::string> out;
  for (const auto& [l, r] : location_rooms) out.push_back(l);
  out.insert(out.end(), rooms.begin(), rooms.end());
  return out;
}

json WorldKnowledge::to_json() const
{
  return {{"rooms", rooms},
          {"location_rooms", location_rooms},
          {"adjacency", adjacency},
          {"persons", persons},
          {"object_locations", object_locations},
          {"object_categories", object_categories},
          {"categories", categories}};
}

WorldKnowledge WorldKnowledge::from_json(const json& j)
{
  WorldKnowledge k;
  k.rooms = j.value("rooms", std::set<std::string>{});
  k.location_rooms = j.value("location_rooms", std::map<std::string, std::string>{});
  k.adjacency = j.value("adjacency", std::map<std::string, std::set<std::string>>{});
  k.persons = j.value("persons", std::set<std::string>{});
  k.object_locations = j.value("object_locations", std::map<std::string, std::string>{});
  k.object_categories = j.value("object_categories", std::map<std::string, std::string>{});
  k.categories = j.value("categories", std::set<std::string>{});
  return k;
}

WorldKnowledge knowledge_from_world(const world::WorldState& w, const CommonsenseTable& commonsense)
{
  WorldKnowledge k;
  for (const auto& r : w.rooms) {
    k.rooms.insert(r.name);
    k.adjacency[r.name].insert(r.connected.begin(), r.connected.end());
  }
  for (const auto& l : w.locations) k.location_rooms[l.name] = l.room;
  for (const auto& p : w.persons) k.persons.insert(p.name);
  for (const auto& [obj, cat] : commonsense.object_categories) {
    k.object_categories[obj] = cat;
    k.categories.insert(cat);
  }
  for (const auto& [cat, rooms] : commonsense.category_rooms) k.categories.insert(cat);
  for (const auto& o : w.objects) {
    k.object_categories[o.name] = o.category;
    k.categories.insert(o.category);
  }
  for (const auto& [name, entries] : w.semantic_map.entries) {
    auto ranked = world::semantic_lookup(w.semantic_map, name);
    if (!ranked.empty()) k.object_locations[name] = ranked.front().location;
  }
  return k;
}

}  // namespace gpsr
