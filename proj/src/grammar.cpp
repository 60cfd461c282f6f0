#include "gpsr/grammar.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr::grammar {

using nlohmann::json;

// --- form language -----------------------------------------------------------

namespace {

class FormParser {
public:
  explicit FormParser(const std::string& s) : s_(s) {}

  FormSeq parse()
  {
    FormSeq seq = sequence();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return seq;
  }

private:
  void skip_ws()
  {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const
  {
    throw SchemaError("template form '" + s_ + "': " + what);
  }

  FormSeq sequence()
  {
    FormSeq seq;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) break;
      const char c = s_[pos_];
      if (c == ')' || c == ']' || c == '|') break;
      seq.push_back(node());
    }
    return seq;
  }

  FormNode node()
  {
    FormNode n;
    const char c = s_[pos_];
    if (c == '{') {
      auto end = s_.find('}', pos_);
      if (end == std::string::npos) fail("unterminated slot");
      n.kind = FormNode::Kind::slot;
      n.text = s_.substr(pos_ + 1, end - pos_ - 1);
      if (n.text.empty()) fail("empty slot name");
      pos_ = end + 1;
    } else if (c == '(') {
      ++pos_;
      n.kind = FormNode::Kind::alt;
      for (;;) {
        n.children.push_back(sequence());
        if (pos_ >= s_.size()) fail("unterminated group");
        if (s_[pos_] == '|') {
          ++pos_;
          continue;
        }
        if (s_[pos_] != ')') fail("expected ')'");
        ++pos_;
        break;
      }
    } else if (c == '[') {
      ++pos_;
      n.kind = FormNode::Kind::opt;
      n.children.push_back(sequence());
      if (pos_ >= s_.size() || s_[pos_] != ']') fail("expected ']'");
      ++pos_;
    } else {
      std::size_t end = pos_;
      while (end < s_.size() && std::string(" ()[]{}|").find(s_[end]) == std::string::npos) ++end;
      n.text = s_.substr(pos_, end - pos_);
      n.kind = n.text == "DET" ? FormNode::Kind::det : FormNode::Kind::literal;
      pos_ = end;
    }
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

const std::set<std::string>& determiners()
{
  static const std::set<std::string> d = {"a", "an", "the", "some", "my", "any", "your"};
  return d;
}

void collect_slots(const FormSeq& seq, std::vector<std::string>& out)
{
  for (const auto& n : seq) {
    if (n.kind == FormNode::Kind::slot) {
      if (std::find(out.begin(), out.end(), n.text) == out.end()) out.push_back(n.text);
    }
    for (const auto& c : n.children) collect_slots(c, out);
  }
}

using Bindings = std::map<std::string, std::string>;
using Cont = std::function<bool(std::size_t)>;

struct Matcher {
  const std::vector<std::string>& toks;
  Bindings bindings;

  bool seq(const FormSeq& s, std::size_t i, std::size_t t, const Cont& k)
  {
    if (i == s.size()) return k(t);
    return node(s[i], t, [&](std::size_t t2) { return seq(s, i + 1, t2, k); });
  }

  bool node(const FormNode& n, std::size_t t, const Cont& k)
  {
    const std::size_t n_toks = toks.size();
    switch (n.kind) {
      case FormNode::Kind::literal:
        return t < n_toks && toks[t] == n.text && k(t + 1);
      case FormNode::Kind::det:
        if (t < n_toks && determiners().count(toks[t]) && k(t + 1)) return true;
        return k(t);
      case FormNode::Kind::opt:
        if (seq(n.children.front(), 0, t, k)) return true;
        return k(t);
      case FormNode::Kind::alt:
        for (const auto& c : n.children) {
          if (seq(c, 0, t, k)) return true;
        }
        return false;
      case FormNode::Kind::slot:
        for (std::size_t e = t + 1; e <= n_toks; ++e) {
          std::vector<std::string> span(toks.begin() + t, toks.begin() + e);
          bindings[n.text] = text::join(span, " ");
          if (k(e)) return true;
        }
        bindings.erase(n.text);
        return false;
    }
    return false;
  }
};

struct CompiledTemplate {
  std::string name;
  std::vector<FormSeq> forms;
  std::vector<std::string> slot_order;
};

const std::vector<CompiledTemplate>& compiled_templates()
{
  static const std::vector<CompiledTemplate> compiled = [] {
    std::vector<CompiledTemplate> out;
    for (const auto& t : command_templates()) {
      CompiledTemplate c{t.name, {}, {}};
      for (const auto& f : t.forms) {
        c.forms.push_back(parse_form(f));
        collect_slots(c.forms.back(), c.slot_order);
      }
      out.push_back(std::move(c));
    }
    return out;
  }();
  return compiled;
}

const std::set<std::string>& object_stop_tokens()
{
  static const std::set<std::string> s = {"it", "them", "her", "him", "me", "and", "to", "from", "on",
                                          "in", "that", "so", "you", "i", "this", "something"};
  return s;
}

// Canonical value for a slot, or nullopt when the robot cannot use it.
std::optional<std::string> validate_slot(const std::string& slot, const std::string& value,
                                         const WorldKnowledge& known)
{
  const auto kind = slot_kind(slot);
  if (kind == "location") return known.location(value);
  if (kind == "room") return known.room(value);
  if (kind == "person") {
    auto p = known.person(value);
    if (p && *p == world::kOperator) return std::nullopt;
    return p;
  }
  if (kind == "category") return known.category(value);
  if (kind == "pose") {
    if (!world::try_pose_from(value)) return std::nullopt;
    return value;
  }
  if (kind == "operation") {
    if (value == "open" || value == "close") return value;
    return std::nullopt;
  }
  if (kind == "object") {
    for (const auto& w : text::split_ws(value)) {
      if (object_stop_tokens().count(w) || determiners().count(w)) return std::nullopt;
    }
    return value;
  }
  return value;  // free text
}

struct TemplateMatch {
  std::optional<IntentFrame> frame;
  std::optional<ParseFailure> failure;  // first shape match with a bad slot
};

TemplateMatch match_template(const CompiledTemplate& tpl, const std::vector<std::string>& toks,
                             const WorldKnowledge& known, bool anchored_end)
{
  TemplateMatch result;
  for (const auto& form : tpl.forms) {
    for (std::size_t start = 0; start < toks.size(); ++start) {
      Matcher m{toks, {}};
      Bindings accepted;
      const bool ok = m.seq(form, 0, start, [&](std::size_t t) {
        if (anchored_end && t != toks.size()) return false;
        Bindings canon;
        for (const auto& slot : tpl.slot_order) {
          auto it = m.bindings.find(slot);
          if (it == m.bindings.end()) continue;
          auto v = validate_slot(slot, it->second, known);
          if (!v) {
            if (!result.failure) {
              result.failure = ParseFailure{slot, slot_kind(slot), it->second,
                                            "unknown " + slot_kind(slot) + " '" + it->second + "'"};
            }
            return false;
          }
          canon[slot] = *v;
        }
        accepted = std::move(canon);
        return true;
      });
      if (ok) {
        IntentFrame f;
        f.template_name = tpl.name;
        f.verb_chain = {tpl.name};
        f.slots = std::move(accepted);
        result.frame = std::move(f);
        return result;
      }
    }
  }
  return result;
}

const std::vector<CompiledTemplate>& modifier_templates()
{
  static const std::vector<CompiledTemplate> mods = [] {
    std::vector<CompiledTemplate> out;
    out.push_back({"hint", {parse_form("{hint_person} (might|may|should|could|will) know")}, {"hint_person"}});
    out.push_back({"deliver", {parse_form("(bring|give|hand) it [back] to me")}, {}});
    return out;
  }();
  return mods;
}

std::string cap(std::string s)
{
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace

FormSeq parse_form(const std::string& form) { return FormParser(form).parse(); }

const std::vector<Template>& command_templates()
{
  static const std::vector<Template> templates = {
      {"fetch_place",
       {"(grab|take|get|fetch|pick up|bring) DET {object} from DET {source} and (put|place) it on DET {target}"}},
      {"fetch",
       {"(bring|fetch|get|retrieve|grab) me DET {object} from DET {source}",
        "(bring|fetch|get|retrieve) DET {object} from DET {source} [to me]"}},
      {"place", {"(put|place) DET {object} on DET {target}"}},
      {"prepare", {"prepare DET {category} [for me] on DET {target}"}},
      {"describe", {"describe DET objects on DET {source} [to me]"}},
      {"count", {"count DET {object} on DET {source}", "tell me how many {object} [there are] on DET {source}"}},
      {"lost", {"(lost|misplaced) my {object} so [(could|can) you] find it [for me]"}},
      {"ask", {"(look for|find|locate) {person} in DET {room} and ask (her|him|them) {question}"}},
      {"find_person", {"(look for|find|locate) {person} in DET {room}"}},
      {"tell_person", {"tell {information} to {person} in DET {room}"}},
      {"follow_to", {"(follow|go after) {person} from DET {room} to DET {target}"}},
      {"follow", {"(follow|go after) {person} from DET {room}"}},
      {"guide", {"(guide|escort|lead) {person} from DET {room} to DET {target}"}},
      {"door", {"{operation} DET door (at|of) DET {source}"}},
      {"count_pose", {"count DET people who are {pose} in DET {room}"}},
      {"count_people", {"count DET people in DET {room}"}},
      {"find_pose", {"find DET person who is {pose} in DET {room}"}},
      {"pose_of", {"tell me DET pose of {person} in DET {room}"}},
      {"answer", {"answer (a|the) question (from|of) {person} in DET {room}"}},
      {"hand_over_request", {"ask {person} in DET {room} to hand [me] over DET {object}"}},
      {"find_object", {"[help me] find DET {object} [that {rest}]", "(look for|locate) DET {object}"}},
  };
  return templates;
}

std::string slot_kind(const std::string& slot)
{
  if (slot == "source" || slot == "target") return "location";
  if (slot == "hint_person") return "person";
  if (slot == "question" || slot == "information" || slot == "rest") return "text";
  return slot;  // object, category, room, person, pose, operation
}

json IntentFrame::to_json() const
{
  return {{"template", template_name}, {"verb_chain", verb_chain}, {"slots", slots}};
}

IntentFrame IntentFrame::from_json(const json& j)
{
  IntentFrame f;
  f.template_name = j.at("template").get<std::string>();
  f.verb_chain = j.value("verb_chain", std::vector<std::string>{});
  f.slots = j.value("slots", std::map<std::string, std::string>{});
  return f;
}

std::vector<std::string> tokenize(const std::string& sentence)
{
  std::string cleaned;
  cleaned.reserve(sentence.size());
  for (char c : text::to_lower(sentence)) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' || c == '-';
    cleaned.push_back(keep ? c : ' ');
  }
  std::vector<std::string> out;
  for (auto& w : text::split_ws(cleaned)) {
    while (!w.empty() && (w.front() == '-' || w.front() == '\'')) w.erase(w.begin());
    while (!w.empty() && (w.back() == '-' || w.back() == '\'')) w.pop_back();
    if (w.empty() || w == "please") continue;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::string> split_sentences(const std::string& command)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : command) {
    if (c == '.' || c == '?' || c == '!' || c == ';') {
      if (!text::trim(cur).empty()) out.push_back(text::trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!text::trim(cur).empty()) out.push_back(text::trim(cur));
  return out;
}

ParseOutcome parse_command(const std::string& command, const WorldKnowledge& known)
{
  const auto sentences = split_sentences(command);
  std::vector<std::vector<std::string>> tokenized;
  for (const auto& s : sentences) tokenized.push_back(tokenize(s));

  std::optional<IntentFrame> frame;
  std::optional<ParseFailure> failure;
  for (const auto& toks : tokenized) {
    for (const auto& tpl : compiled_templates()) {
      auto m = match_template(tpl, toks, known, true);
      if (m.frame) {
        frame = std::move(m.frame);
        break;
      }
      if (m.failure && !failure) failure = std::move(m.failure);
    }
    if (frame) break;
  }
  if (!frame) {
    if (failure) return *failure;
    return ParseFailure{"", "command", text::trim(command), "no supported command pattern"};
  }

  for (const auto& toks : tokenized) {
    for (const auto& mod : modifier_templates()) {
      auto m = match_template(mod, toks, known, false);
      if (!m.frame) continue;
      if (mod.name == "hint" && !frame->slots.count("hint_person")) {
        frame->slots["hint_person"] = m.frame->slots.at("hint_person");
      } else if (mod.name == "deliver" &&
                 std::find(frame->verb_chain.begin(), frame->verb_chain.end(), "deliver") == frame->verb_chain.end()) {
        frame->verb_chain.push_back("deliver");
      }
    }
  }
  return *frame;
}

namespace {

bool delivers(const IntentFrame& f)
{
  return std::find(f.verb_chain.begin(), f.verb_chain.end(), "deliver") != f.verb_chain.end();
}

}  // namespace

std::vector<std::string> steps_for(const IntentFrame& f)
{
  auto s = [&](const char* key) -> std::string {
    auto it = f.slots.find(key);
    return it == f.slots.end() ? std::string() : it->second;
  };
  const auto& t = f.template_name;
  std::vector<std::string> out;
  auto fetch_tail = [&](const std::string& obj) {
    out.push_back("Pick " + obj);
    out.push_back("Move to the operator");
    out.push_back("Hand over " + obj + " to the operator");
  };
  auto visit_person = [&] {
    out.push_back("Move to the " + s("room"));
    out.push_back("Find " + s("person"));
  };

  if (t == "fetch") {
    out = {"Move to the " + s("source"), "Find " + s("object")};
    fetch_tail(s("object"));
  } else if (t == "fetch_place") {
    out = {"Move to the " + s("source"), "Find " + s("object"), "Pick " + s("object"), "Move to the " + s("target"),
           "Place " + s("object") + " on the " + s("target")};
  } else if (t == "place") {
    out = {"Move to the location of " + s("object"), "Find " + s("object"), "Pick " + s("object"),
           "Move to the " + s("target"), "Place " + s("object") + " on the " + s("target")};
  } else if (t == "prepare") {
    const auto c = s("category");
    out = {"Move to the location of any " + c, "Find any " + c, "Pick the " + c, "Move to the " + s("target"),
           "Place the " + c + " on the " + s("target")};
  } else if (t == "describe") {
    out = {"Move to the " + s("source"), "Find all objects", "Move to the operator",
           "Tell the operator the objects on the " + s("source")};
  } else if (t == "count") {
    out = {"Move to the " + s("source"), "Count the " + s("object"), "Move to the operator",
           "Tell the operator the number of " + s("object")};
  } else if (t == "lost" || t == "find_object") {
    out = {"Move to the location of " + s("object"), "Find " + s("object")};
    if (delivers(f)) {
      fetch_tail(s("object"));
    } else {
      out.push_back("Move to the operator");
      out.push_back("Tell the operator where " + s("object") + " is");
    }
  } else if (t == "ask") {
    visit_person();
    out.push_back("Ask " + s("person") + " " + s("question"));
  } else if (t == "find_person") {
    visit_person();
  } else if (t == "tell_person") {
    visit_person();
    out.push_back("Tell " + s("person") + " " + s("information"));
  } else if (t == "follow") {
    visit_person();
    out.push_back("Follow " + s("person"));
  } else if (t == "follow_to") {
    visit_person();
    out.push_back("Follow " + s("person") + " to the " + s("target"));
  } else if (t == "guide") {
    visit_person();
    out.push_back("Guide " + s("person") + " to the " + s("target"));
  } else if (t == "door") {
    out = {"Move to the " + s("source"), cap(s("operation")) + " the door at the " + s("source")};
  } else if (t == "count_pose") {
    out = {"Move to the " + s("room"), "Count the people who are " + s("pose"), "Move to the operator",
           "Tell the operator the number of people who are " + s("pose")};
  } else if (t == "count_people") {
    out = {"Move to the " + s("room"), "Count the people", "Move to the operator",
           "Tell the operator the number of people"};
  } else if (t == "find_pose") {
    out = {"Move to the " + s("room"), "Find the person who is " + s("pose")};
  } else if (t == "pose_of") {
    visit_person();
    out.push_back("Detect the pose of " + s("person"));
    out.push_back("Move to the operator");
    out.push_back("Tell the operator the pose of " + s("person"));
  } else if (t == "answer") {
    visit_person();
    out.push_back("Answer the question of " + s("person"));
  } else if (t == "hand_over_request") {
    visit_person();
    out.push_back("Ask " + s("person") + " to hand over " + s("object"));
    out.push_back("Move to the operator");
    out.push_back("Hand over " + s("object") + " to the operator");
  } else {
    throw PreconditionError("no step recipe for template '" + t + "'");
  }
  return out;
}

std::string task_description(const IntentFrame& f)
{
  auto s = [&](const char* key) -> std::string {
    auto it = f.slots.find(key);
    return it == f.slots.end() ? std::string() : it->second;
  };
  const auto& t = f.template_name;
  if (t == "fetch") return "bring the " + s("object") + " from the " + s("source") + " to the operator";
  if (t == "fetch_place") return "take the " + s("object") + " from the " + s("source") + " and place it on the " + s("target");
  if (t == "place") return "put the " + s("object") + " on the " + s("target");
  if (t == "prepare") return "prepare a " + s("category") + " on the " + s("target");
  if (t == "describe") return "describe the objects on the " + s("source") + " to the operator";
  if (t == "count") return "count the " + s("object") + " on the " + s("source");
  if (t == "lost" || t == "find_object")
    return "find the " + s("object") + (delivers(f) ? " and bring it to the operator" : "");
  if (t == "ask") return "ask " + s("person") + " " + s("question");
  if (t == "find_person") return "find " + s("person") + " in the " + s("room");
  if (t == "tell_person") return "tell " + s("information") + " to " + s("person");
  if (t == "follow") return "follow " + s("person");
  if (t == "follow_to") return "follow " + s("person") + " to the " + s("target");
  if (t == "guide") return "guide " + s("person") + " to the " + s("target");
  if (t == "door") return s("operation") + " the door at the " + s("source");
  if (t == "count_pose") return "count the people who are " + s("pose") + " in the " + s("room");
  if (t == "count_people") return "count the people in the " + s("room");
  if (t == "find_pose") return "find the person who is " + s("pose") + " in the " + s("room");
  if (t == "pose_of") return "tell the operator the pose of " + s("person");
  if (t == "answer") return "answer the question of " + s("person");
  if (t == "hand_over_request") return "ask " + s("person") + " to hand over the " + s("object");
  return t;
}

}  // namespace gpsr::grammar
