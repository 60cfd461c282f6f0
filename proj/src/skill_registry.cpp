#include "gpsr/skill_registry.hpp"

#include <algorithm>

namespace gpsr::skills {

namespace {

using C = Collaborator;

std::vector<SkillSpec> build()
{
  return {
      {"go_to_location", {"location"}, {}, {C::world}, "robot moves to location"},
      {"ask_location", {"object"}, {}, {C::world, C::dialogue, C::backend}, "none; returns a location name"},
      {"find_concrete_name_objects", {"object"}, {"room"}, {C::world, C::perception}, "none; binds the object"},
      {"find_category_name_objects", {"category"}, {"room"}, {C::world, C::perception}, "none; binds objects"},
      {"count_concrete_name_objects", {"objects"}, {}, {C::world, C::perception}, "none; returns a count"},
      {"count_category_name_objects", {"category"}, {}, {C::world, C::perception}, "none; returns a count"},
      {"find_person", {"person"}, {}, {C::world, C::perception}, "none"},
      {"detect_person_pose", {"person"}, {}, {C::world, C::perception}, "none; returns a pose"},
      {"find_specific_pose_person", {"person", "pose"}, {}, {C::world, C::perception}, "none"},
      {"count_specific_pose_person", {"person", "pose"}, {}, {C::world, C::perception}, "none; returns a count"},
      {"count_person", {}, {}, {C::world, C::perception}, "none; returns a count"},
      {"follow_person", {"person"}, {"location"}, {C::world, C::perception}, "robot moves to the person's room"},
      {"guide", {"person", "location"}, {}, {C::world}, "person and robot move to location"},
      {"pick", {"object", "location"}, {}, {C::world}, "object moves into the gripper"},
      {"hand_over", {"object", "person"}, {}, {C::world}, "object moves to the person's hands"},
      {"ask_person_to_hand_over", {"object", "person", "query"}, {}, {C::world, C::dialogue},
       "object moves from the person to the gripper"},
      {"place", {"object", "location"}, {}, {C::world}, "object moves from the gripper to location"},
      {"ask_question", {"person", "question"}, {}, {C::dialogue, C::backend}, "none; returns the answer"},
      {"answer_question", {}, {"person"}, {C::dialogue, C::backend}, "none"},
      {"tell_information", {"information", "person"}, {}, {C::dialogue, C::backend}, "none"},
      {"operate_door", {"location", "operation"}, {}, {C::world}, "door opens or closes"},
  };
}

}  // namespace

const std::vector<SkillSpec>& registry()
{
  static const std::vector<SkillSpec> kRegistry = build();
  return kRegistry;
}

const SkillSpec* find_skill(const std::string& name)
{
  for (const auto& s : registry()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::string> signature_error(const std::string& function, const std::map<std::string, std::string>& args)
{
  const auto* spec = find_skill(function);
  if (!spec) return "unknown skill '" + function + "'";
  for (const auto& r : spec->required) {
    if (!args.count(r)) return function + ": missing argument '" + r + "'";
  }
  for (const auto& [name, value] : args) {
    const bool known = std::find(spec->required.begin(), spec->required.end(), name) != spec->required.end() ||
                       std::find(spec->optional.begin(), spec->optional.end(), name) != spec->optional.end();
    if (!known) return function + ": unexpected argument '" + name + "'";
  }
  return std::nullopt;
}

}  // namespace gpsr::skills
