#include "gpsr/perception.hpp"

#include <algorithm>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr::perception {

using nlohmann::json;

PromptEntry PromptEntry::make(std::string label, std::string text)
{
  PromptEntry e{std::move(label), std::move(text), {}};
  e.tags = text::content_tags(e.text);
  if (e.tags.empty()) e.tags = text::content_tags(e.label);
  if (e.tags.empty()) throw SchemaError("prompt entry '" + e.label + "' has no content words");
  return e;
}

json PromptEntry::to_json() const { return {{"label", label}, {"text", text}}; }

PromptEntry PromptEntry::from_json(const json& j)
{
  if (!j.is_object() || !j.contains("label") || !j.contains("text"))
    throw SchemaError("perception entry: expected {label, text}");
  return make(j.at("label").get<std::string>(), j.at("text").get<std::string>());
}

NoiseConfig NoiseConfig::from_json(const json& j)
{
  NoiseConfig n;
  if (j.is_null()) return n;
  for (const auto& o : j.value("drop_objects", json::array())) n.drop_objects.insert(o.get<std::string>());
  for (const auto& p : j.value("hidden_persons", json::array())) n.hidden_persons.insert(p.get<std::string>());
  if (j.contains("distractor_tags")) {
    for (const auto& [obj, tags] : j.at("distractor_tags").items()) {
      for (const auto& t : tags) n.distractor_tags[obj].insert(t.get<std::string>());
    }
  }
  n.drop_rate = j.value("drop_rate", 0.0);
  n.seed = j.value("seed", std::uint64_t{0});
  return n;
}

json NoiseConfig::to_json() const
{
  return {{"drop_objects", drop_objects},
          {"hidden_persons", hidden_persons},
          {"distractor_tags", distractor_tags},
          {"drop_rate", drop_rate},
          {"seed", seed}};
}

namespace {

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::uint64_t seed, const std::string& s, long salt)
{
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  const auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (char c : s) mix(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((static_cast<std::uint64_t>(salt) >> (8 * i)) & 0xff));
  return h;
}

bool randomly_dropped(const NoiseConfig& noise, const std::string& name, long clock)
{
  if (noise.drop_rate <= 0.0) return false;
  const double u = static_cast<double>(fnv1a(noise.seed, name, clock) >> 11) * 0x1.0p-53;
  return u < noise.drop_rate;
}

}  // namespace

std::vector<Detection> detect_objects(const world::WorldState& world, const std::string& at,
                                      const VocabularyMode& mode, const NoiseConfig& noise,
                                      const DetectorConfig& config)
{
  const bool sweep_room = world.is_room(at);
  if (!world.is_room(at) && !world.is_location(at))
    throw PreconditionError("detect_objects: unknown place '" + at + "'");
  const bool robot_there = text::to_lower(world.robot.at) == text::to_lower(at) ||
                           (sweep_room && text::to_lower(world.robot_room()) == text::to_lower(at));
  if (!robot_there) throw PreconditionError("detect_objects: robot is not at '" + at + "'");

  std::vector<Detection> out;
  for (const auto& o : world.objects) {
    if (o.place.kind != world::Place::Kind::location) continue;
    const bool here = sweep_room ? text::to_lower(world.room_of(o.place.ref)) == text::to_lower(at)
                                 : text::to_lower(o.place.ref) == text::to_lower(at);
    if (!here) continue;
    if (noise.drop_objects.count(o.name) || randomly_dropped(noise, o.name, world.clock)) continue;

    Detection d;
    d.entity_ref = o.name;
    d.observed_tags = o.tags;
    if (auto it = noise.distractor_tags.find(o.name); it != noise.distractor_tags.end())
      d.observed_tags.insert(it->second.begin(), it->second.end());

    if (const auto* closed = std::get_if<ClosedVocabulary>(&mode)) {
      if (!closed->classes.count(o.category)) continue;
      d.proposed_label = o.category;
      out.push_back(std::move(d));
      continue;
    }
    const auto& entries = std::get<OpenVocabulary>(mode).entries;
    // A prompt naming the object's class detects it outright; otherwise the description
    // has to overlap the object's appearance.
    bool detected = false;
    for (const auto& e : entries) {
      const auto label = text::to_lower(e.label);
      if (label == text::to_lower(o.name) || label == text::to_lower(o.category) ||
          text::jaccard(d.observed_tags, e.tags) >= config.detection_threshold) {
        detected = true;
        break;
      }
    }
    if (!detected) continue;
    d.proposed_label = classify_detection(d, entries).label;
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.entity_ref < b.entity_ref; });
  return out;
}

Classification classify_detection(const Detection& detection, const std::vector<PromptEntry>& entries)
{
  if (entries.empty()) throw PreconditionError("classify_detection: no prompt entries");
  Classification best{entries.front().label, -1.0};
  for (const auto& e : entries) {
    const double score = text::jaccard(detection.observed_tags, e.tags);
    if (score > best.score || (score == best.score && e.label < best.label)) best = {e.label, score};
  }
  return best;
}

std::vector<std::pair<std::string, world::Pose>> perceive_persons(const world::WorldState& world,
                                                                  const std::string& room,
                                                                  const PersonFilter& filter,
                                                                  const NoiseConfig& noise)
{
  std::vector<std::pair<std::string, world::Pose>> out;
  for (const auto& p : world.persons) {
    if (p.name == world::kOperator) continue;
    if (text::to_lower(p.room) != text::to_lower(room)) continue;
    if (noise.hidden_persons.count(p.name)) continue;
    if (filter.pose && p.pose != *filter.pose) continue;
    if (!std::includes(p.clothing_tags.begin(), p.clothing_tags.end(), filter.clothing.begin(),
                       filter.clothing.end()))
      continue;
    out.emplace_back(p.name, p.pose);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PromptEntry> effective_entries(const std::vector<PromptEntry>& entries)
{
  std::vector<PromptEntry> out;
  for (const auto& e : entries) {
    auto it = std::find_if(out.begin(), out.end(), [&](const PromptEntry& x) { return x.label == e.label; });
    if (it != out.end()) *it = e;
    else out.push_back(e);
  }
  return out;
}

}  // namespace gpsr::perception
