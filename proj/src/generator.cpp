#include "gpsr/generator.hpp"

#include <random>
#include <set>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr::grammar {

namespace {

const std::vector<std::string> kQuestions = {"if she wants dinner at home tonight", "what time it is",
                                             "what their favorite drink is", "if they need anything"};
const std::vector<std::string> kInformation = {"the time", "a joke", "the day of the week",
                                               "the name of the house"};
const std::vector<std::string> kRest = {"i bought the other day", "i left somewhere", "was here yesterday"};
const std::vector<std::string> kPoses = {"standing", "sitting", "lying", "raising arm"};

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v)
{
  return v[rng() % v.size()];
}

void slots_in(const FormSeq& seq, std::set<std::string>& out)
{
  for (const auto& n : seq) {
    if (n.kind == FormNode::Kind::slot) out.insert(n.text);
    for (const auto& c : n.children) slots_in(c, out);
  }
}

void expand(const FormSeq& seq, std::mt19937_64& rng, const std::map<std::string, std::string>& values,
            std::vector<std::string>& words, std::map<std::string, std::string>& used)
{
  for (const auto& n : seq) {
    switch (n.kind) {
      case FormNode::Kind::literal: words.push_back(n.text); break;
      case FormNode::Kind::det: words.push_back("the"); break;
      case FormNode::Kind::alt: expand(pick(rng, n.children), rng, values, words, used); break;
      case FormNode::Kind::opt:
        if (rng() % 2 == 0) expand(n.children.front(), rng, values, words, used);
        break;
      case FormNode::Kind::slot: {
        const auto& v = values.at(n.text);
        words.push_back(v);
        used[n.text] = v;
        break;
      }
    }
  }
}

[[noreturn]] void unresolvable(const std::string& slot, const std::string& why)
{
  throw PreconditionError("unresolvable placeholder {" + slot + "}: " + why);
}

}  // namespace

GeneratedCommand generate_command(const std::vector<Template>& templates, const world::WorldState& w,
                                  std::uint64_t seed)
{
  if (templates.empty()) throw PreconditionError("generate_command: empty template set");
  std::mt19937_64 rng(seed);
  const auto& tpl = pick(rng, templates);
  if (tpl.forms.empty()) throw PreconditionError("template '" + tpl.name + "' has no forms");
  const FormSeq form = parse_form(pick(rng, tpl.forms));

  std::set<std::string> needed;
  slots_in(form, needed);

  std::vector<const world::ObjectEntity*> placed;
  for (const auto& o : w.objects) {
    if (o.place.kind == world::Place::Kind::location) placed.push_back(&o);
  }
  std::vector<const world::PersonEntity*> people;
  for (const auto& p : w.persons) {
    if (p.name != world::kOperator) people.push_back(&p);
  }
  std::vector<std::string> surfaces, doors;
  for (const auto& l : w.locations) {
    if (l.kind == world::LocationKind::door) doors.push_back(l.name);
    else surfaces.push_back(l.name);
  }

  std::map<std::string, std::string> values;
  if (needed.count("object")) {
    if (placed.empty()) unresolvable("object", "world has no placed objects");
    const auto* o = pick(rng, placed);
    values["object"] = o->name;
    values["source"] = o->place.ref;
  }
  if (needed.count("source") && !values.count("source")) {
    const auto& pool = tpl.name == "door" ? doors : surfaces;
    if (pool.empty()) unresolvable("source", "no suitable location");
    values["source"] = pick(rng, pool);
  }
  if (needed.count("target")) {
    if (surfaces.empty()) unresolvable("target", "no surface location");
    values["target"] = pick(rng, surfaces);
  }
  if (needed.count("category")) {
    std::vector<std::string> cats;
    for (const auto* o : placed) cats.push_back(o->category);
    if (cats.empty()) unresolvable("category", "world has no placed objects");
    values["category"] = pick(rng, cats);
  }
  if (needed.count("person")) {
    if (people.empty()) unresolvable("person", "world has no persons");
    const auto* p = pick(rng, people);
    values["person"] = p->name;
    values["room"] = p->room;
  }
  if (needed.count("room") && !values.count("room")) {
    if (w.rooms.empty()) unresolvable("room", "world has no rooms");
    values["room"] = pick(rng, w.rooms).name;
  }
  if (needed.count("question")) values["question"] = pick(rng, kQuestions);
  if (needed.count("information")) values["information"] = pick(rng, kInformation);
  if (needed.count("rest")) values["rest"] = pick(rng, kRest);
  if (needed.count("pose")) values["pose"] = pick(rng, kPoses);
  if (needed.count("operation")) values["operation"] = rng() % 2 ? "open" : "close";

  std::vector<std::string> words;
  GeneratedCommand out;
  expand(form, rng, values, words, out.intent.slots);
  out.intent.template_name = tpl.name;
  out.intent.verb_chain = {tpl.name};

  out.text = text::join(words, " ");
  if (!out.text.empty()) out.text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out.text[0])));
  out.text += tpl.name == "ask" || tpl.name == "answer" ? "?" : ".";
  return out;
}

}  // namespace gpsr::grammar
