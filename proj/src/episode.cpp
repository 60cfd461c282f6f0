#include "gpsr/episode.hpp"

#include <cmath>
#include <memory>

#include "gpsr/mock_backend.hpp"
#include "gpsr/planner.hpp"
#include "gpsr/recovery.hpp"
#include "gpsr/skills.hpp"
#include "gpsr/speech.hpp"
#include "gpsr/text.hpp"

namespace gpsr::harness {

using nlohmann::json;
using planner::Plan;
using planner::SkillCall;
using recovery::ActionKind;
using recovery::FailureEvent;
using recovery::Mode;
using recovery::RecoveryAction;

namespace {

json to_plain(const nlohmann::ordered_json& j) { return json::parse(j.dump()); }

// Case-insensitive replacement of the first occurrence of `from`.
std::string replace_ci(const std::string& text, const std::string& from, const std::string& to)
{
  const auto lower = text::to_lower(text);
  const auto pos = lower.find(text::to_lower(from));
  if (from.empty() || pos == std::string::npos) return text;
  return text.substr(0, pos) + to + text.substr(pos + from.size());
}

std::string find_label(const SkillCall& c)
{
  return c.function == "find_category_name_objects" ? c.arg("category") : c.arg("object");
}

struct EpisodeEnd {
  Terminal status;
  std::string reason;
};

// Where an unknown object turned out to be.
struct Located {
  std::string location;
  std::optional<std::string> entity;  // the object actually seen, when the robot looked
};

class Runner {
public:
  Runner(const Scenario& sc, const EpisodeOptions& opt, lm::Backend& backend)
      : sc_(sc),
        opt_(opt),
        ctx_(world::load_world(sc.world_doc), sc.ledger, {}, planner::BackendLink{backend, {}},
             dialogue::Dialogue(sc.scripts), trace_)
  {
    ctx_.knowledge = knowledge_from_world(ctx_.world, sc.commonsense);
    ctx_.link.observer = [this](const lm::BackendRequest& req, const lm::BackendResponse& resp) {
      json e = {{"kind", lm::to_string(req.kind)}, {"payload", req.payload}, {"ok", resp.ok()},
                {"ledger_version", ctx_.ledger.version}};
      if (resp.ok()) {
        e["result"] = resp.result;
      } else {
        e["failure"] = {{"code", resp.failure->code}, {"message", resp.failure->message}, {"detail", resp.failure->detail}};
      }
      trace_.append("backend", ctx_.tick, e);
    };
    ctx_.noise = sc.noise;
    if (opt.live_operator) ctx_.dialogue.set_live_operator(opt.live_operator);
    if (opt.listener) trace_.set_listener(opt.listener);
    skills::inject(ctx_, sc.injection);
    tick_budget_ = sc.tick_budget.value_or(opt.rules.tick_budget);
  }

  EpisodeResult run()
  {
    trace_.append("episode_start", 0,
                  {{"scenario", sc_.name},
                   {"true_text", sc_.command.true_text},
                   {"slots", sc_.slots},
                   {"backend", ctx_.link.backend.name()},
                   {"seed", sc_.seed},
                   {"ledger", ctx_.ledger.name},
                   {"ledger_version", ctx_.ledger.version},
                   {"budget", sc_.budget.to_json()},
                   {"tick_budget", tick_budget_}});
    try {
      loop();
    } catch (const Error& e) {
      finish(Terminal::give_up, std::string(e.code()) + ": " + e.what());
    }

    EpisodeResult r;
    r.status = end_->status;
    r.reason = end_->reason;
    r.modes = modes_;
    r.recoveries = recoveries_;
    r.final_world = ctx_.world;
    r.final_ledger = ctx_.ledger;
    r.score = score_episode(trace_.events(), opt_.rules);
    trace_.append("score", ctx_.tick, r.score.to_json());
    r.trace = trace_;
    return r;
  }

private:
  // --- top level ----------------------------------------------------------------

  void loop()
  {
    const auto heard = heard_text();
    trace_.append("utterance", 0, {{"speaker", world::kOperator}, {"text", heard}});
    const auto t = speech::transcribe(heard, ctx_.ledger.transcriber_lexicon);
    trace_.append("transcript", 0,
                  {{"heard", heard}, {"text", t.text}, {"recovered_slots", t.recovered_slots},
                   {"lexicon_version", ctx_.ledger.version}});
    skills::say(ctx_, "I heard: " + t.text);
    command_ = t.text;

    while (!end_) {
      if (!plan_command()) return;
      if (!execute_plan()) return;
      if (confirm_completion()) return;
    }
  }

  std::string heard_text() const
  {
    if (opt_.heard_override) return *opt_.heard_override;
    if (sc_.command.heard_text) return *sc_.command.heard_text;
    if (sc_.command.asr)
      return speech::corrupt_utterance(sc_.command.true_text, sc_.confusion, sc_.command.asr->seed, sc_.command.asr->rate);
    return sc_.command.true_text;
  }

  void finish(Terminal status, const std::string& reason)
  {
    if (end_) return;
    end_ = EpisodeEnd{status, reason};
    if (status != Terminal::success) skills::say(ctx_, "I am sorry, I could not complete the task.");
    std::vector<std::string> modes(modes_.begin(), modes_.end());
    trace_.append("episode_end", ctx_.tick,
                  {{"status", to_string(status)},
                   {"reason", reason},
                   {"modes", modes},
                   {"recoveries", recoveries_},
                   {"help_requests", ctx_.help_requests},
                   {"world", world::to_json(ctx_.world)}});
  }

  // --- failure bookkeeping ------------------------------------------------------

  FailureEvent failure(recovery::Evidence evidence)
  {
    FailureEvent ev{recovery::classify_failure(evidence), std::move(evidence), ctx_.tick};
    modes_.insert(recovery::to_string(ev.mode));
    auto j = ev.to_json();
    trace_.append("failure", ctx_.tick, j);
    return ev;
  }

  recovery::RecoveryState state() const
  {
    recovery::RecoveryState s;
    s.replans_used = replans_;
    s.operator_queries_used = queries_;
    return s;
  }

  void record(const FailureEvent& ev, const RecoveryAction& a)
  {
    ++recoveries_;
    trace_.append("recovery", ctx_.tick,
                  {{"mode", recovery::to_string(ev.mode)},
                   {"evidence", recovery::evidence_to_json(ev.evidence)},
                   {"action", recovery::to_string(a.kind)},
                   {"params", a.params},
                   {"ledger_version_after", ctx_.ledger.version}});
    if (a.kind == ActionKind::GIVE_UP) finish(Terminal::give_up, a.params.value("reason", "gave up"));
  }

  void update_ledger(const planner::LedgerUpdate& u)
  {
    ctx_.ledger = planner::update_ledger(ctx_.ledger, u);
    trace_.append("ledger_update", ctx_.tick, {{"update", planner::update_to_json(u)}, {"version", ctx_.ledger.version}});
  }

  bool out_of_ticks()
  {
    if (ctx_.tick < tick_budget_) return false;
    finish(Terminal::tick_exhausted, "tick budget of " + std::to_string(tick_budget_) + " spent");
    return true;
  }

  // --- planning -----------------------------------------------------------------

  bool plan_command()
  {
    while (!end_) {
      auto outcome = planner::decompose(command_, ctx_.ledger, ctx_.link, ctx_.knowledge);
      if (auto* cp = std::get_if<planner::CannotParse>(&outcome)) {
        recover_misheard(recovery::ParseEvidence{command_, cp->slot, cp->kind, cp->text}, cp->kind, cp->text);
        continue;
      }
      decomposition_ = std::get<planner::Decomposition>(outcome);
      trace_.append("decomposition", ctx_.tick,
                    {{"command", command_}, {"steps", [&] {
                       std::vector<std::string> s;
                       for (const auto& st : decomposition_.steps) s.push_back(st.text);
                       return s;
                     }()},
                     {"task", decomposition_.task}, {"frame", decomposition_.frame}});
      adopt_hint();

      auto grounded = planner::ground(decomposition_.steps, ctx_.ledger, ctx_.link, ctx_.knowledge, ctx_.world.robot.at,
                                      command_);
      if (auto* gf = std::get_if<planner::GroundingFailure>(&grounded)) {
        handle_grounding_failure(*gf);
        continue;
      }
      auto plan = std::get<Plan>(grounded);
      const auto report = planner::validate_plan(plan, ctx_.knowledge);
      trace_.append("validation", ctx_.tick, report.to_json());
      if (!report.pass()) {
        auto ev = failure(recovery::PlanDefectEvidence{report});
        std::vector<std::string> lines;
        for (const auto& d : report.defects) lines.push_back(planner::to_string(d.code) + ": " + d.message);
        replan_with_feedback(ev, lines);
        continue;
      }
      set_plan(std::move(plan), "initial");
      return true;
    }
    return false;
  }

  void set_plan(Plan plan, const std::string& origin)
  {
    plan_ = std::move(plan);
    pc_ = 0;
    retries_ = 0;
    trace_.append("plan", ctx_.tick, {{"origin", origin}, {"plan", to_plain(planner::plan_to_json(plan_))}});
  }

  void adopt_hint()
  {
    const auto& slots = decomposition_.frame.value("slots", json::object());
    if (!slots.contains("hint_person")) return;
    if (auto p = ctx_.knowledge.person(slots.at("hint_person").get<std::string>())) ctx_.hint_person = *p;
  }

  void handle_grounding_failure(const planner::GroundingFailure& gf)
  {
    using R = planner::GroundingReason;
    if (gf.reason == R::UNKNOWN_OBJECT_LOCATION) {
      auto ev = failure(recovery::GroundingEvidence{gf.step, gf.reason, gf.name, false});
      if (auto found = locate_object(ev, gf.name, gf.category)) learn(gf.name, *found, gf.category);
      return;  // re-planned with what was learned
    }
    if (gf.reason == R::AMBIGUOUS_STEP) {
      auto ev = failure(recovery::GroundingEvidence{gf.step, gf.reason, gf.name, false});
      replan_with_feedback(ev, {"The step \"" + gf.name + "\" does not map to any skill."});
      return;
    }
    // Every name in the plan came from the transcript, so an unknown place or person is a
    // hearing problem first.
    const auto kind = gf.reason == R::UNKNOWN_PERSON ? "person" : "location";
    recover_misheard(recovery::GroundingEvidence{gf.step, gf.reason, gf.name, true}, kind, gf.name);
  }

  std::vector<std::string> candidates_for(const std::string& kind) const
  {
    const auto& k = ctx_.knowledge;
    std::vector<std::string> out;
    if (kind == "location") return k.place_names();
    if (kind == "room") return {k.rooms.begin(), k.rooms.end()};
    if (kind == "category") return {k.categories.begin(), k.categories.end()};
    if (kind == "person") {
      for (const auto& p : k.persons)
        if (p != world::kOperator) out.push_back(p);
      return out;
    }
    if (kind == "object") {
      std::set<std::string> names;
      for (const auto& [o, c] : k.object_categories) names.insert(o);
      for (const auto& [o, l] : k.object_locations) names.insert(o);
      return {names.begin(), names.end()};
    }
    return out;
  }

  static planner::AddLexicon::Kind lexicon_kind(const std::string& kind)
  {
    if (kind == "person") return planner::AddLexicon::Kind::person;
    if (kind == "object" || kind == "category") return planner::AddLexicon::Kind::object;
    return planner::AddLexicon::Kind::location;
  }

  // M2 for names that did not survive transcription: ask for a rephrase, then replan with the
  // correction in the ledger.
  void recover_misheard(recovery::Evidence evidence, const std::string& kind, const std::string& text)
  {
    auto ev = failure(std::move(evidence));
    auto st = state();
    auto action = recovery::recover(ev, st, sc_.budget);
    if (action.kind != ActionKind::ASK_OPERATOR_REPHRASE) {
      record(ev, action);
      return;
    }
    ++queries_;
    const auto question = "Sorry, I did not understand \"" + text + "\". Could you rephrase the " +
                          (kind.empty() || kind == "command" ? std::string("command") : kind) + "?";
    action.params["question"] = question;
    record(ev, action);
    const auto turn = skills::ask(ctx_, world::kOperator, question, true);
    if (turn.no_response()) {
      record(ev, {ActionKind::GIVE_UP, {{"reason", "the operator did not rephrase"}}});
      return;
    }

    std::vector<planner::LedgerUpdate> updates;
    std::optional<std::string> value;
    const auto candidates = candidates_for(kind);
    if (!candidates.empty()) value = dialogue::extract_slot(*turn.corrected_text, kind, candidates, ctx_.ledger, ctx_.link);
    if (value) {
      command_ = replace_ci(command_, text, *value);
      updates.push_back(planner::AddLexicon{lexicon_kind(kind), {*value}});
      updates.push_back(planner::AddFeedback{"\"" + text + "\" means \"" + *value + "\"."});
    } else {
      command_ = *turn.corrected_text;
      updates.push_back(planner::AddFeedback{"The operator rephrased \"" + text + "\" as \"" + command_ + "\"."});
    }

    st = state();
    st.rephrased = true;
    auto next = recovery::recover(ev, st, sc_.budget);
    if (next.kind != ActionKind::UPDATE_LEDGER_AND_REPLAN) {
      record(ev, next);
      return;
    }
    ++replans_;
    for (const auto& u : updates) update_ledger(u);
    next.params["command"] = command_;
    record(ev, next);
  }

  void replan_with_feedback(const FailureEvent& ev, const std::vector<std::string>& lines)
  {
    auto action = recovery::recover(ev, state(), sc_.budget);
    if (action.kind != ActionKind::UPDATE_LEDGER_AND_REPLAN) {
      record(ev, action);
      return;
    }
    ++replans_;
    for (const auto& l : lines) update_ledger(planner::AddFeedback{l});
    record(ev, action);
  }

  // --- M1: finding out where something is --------------------------------------

  std::optional<Located> locate_object(const FailureEvent& ev, const std::string& name, bool category)
  {
    auto st = state();
    std::vector<std::string> suggestions;
    while (!end_) {
      st.replans_used = replans_;
      st.operator_queries_used = queries_;
      auto action = recovery::recover(ev, st, sc_.budget);
      switch (action.kind) {
        case ActionKind::ASK_LOCATION: {
          ++queries_;
          st.location_asked = true;
          record(ev, action);
          if (out_of_ticks()) return std::nullopt;
          const auto r = skills::execute_skill(ctx_, {"ask_location", {{"object", name}}, 0});
          if (r.success && r.observations.value("source", "") == "person")
            return Located{r.observations.at("location").get<std::string>(), std::nullopt};
          if (r.observations.contains("candidates"))
            suggestions = r.observations.at("candidates").get<std::vector<std::string>>();
          st.suggestions_pending = !suggestions.empty();
          break;
        }
        case ActionKind::SUGGEST_AND_VISIT: {
          ++replans_;
          st.suggestions_pending = false;
          if (suggestions.size() > static_cast<std::size_t>(sc_.budget.max_suggestions))
            suggestions.resize(static_cast<std::size_t>(sc_.budget.max_suggestions));
          action.params["candidates"] = suggestions;
          record(ev, action);
          for (const auto& place : suggestions) {
            if (auto found = visit(place, name, category)) return found;
            if (end_) return std::nullopt;
          }
          break;
        }
        case ActionKind::ASK_OPERATOR_REPHRASE: {
          ++queries_;
          st.rephrased = true;
          const auto question = "I could not find the " + name + ". Where can I find it?";
          action.params["question"] = question;
          record(ev, action);
          const auto turn = skills::ask(ctx_, world::kOperator, question, true);
          if (!turn.no_response()) {
            if (auto loc = dialogue::extract_slot(*turn.corrected_text, "location", ctx_.knowledge.place_names(),
                                                  ctx_.ledger, ctx_.link))
              return Located{*loc, std::nullopt};
          }
          break;
        }
        default:
          record(ev, action);
          return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // Exploratory look at one candidate place.
  std::optional<Located> visit(const std::string& place, const std::string& name, bool category)
  {
    if (out_of_ticks()) return std::nullopt;
    const skills::ExecOptions explore{true};
    if (!skills::execute_skill(ctx_, {"go_to_location", {{"location", place}}, 0}, explore).success) return std::nullopt;
    if (out_of_ticks()) return std::nullopt;
    SkillCall find{category ? "find_category_name_objects" : "find_concrete_name_objects",
                   {{category ? "category" : "object", name}}, 0};
    if (ctx_.world.is_room(place)) find.args["room"] = ctx_.world.find_room(place)->name;
    const auto r = skills::execute_skill(ctx_, find, explore);
    if (!r.success) return std::nullopt;
    return Located{r.observations.at("location").get<std::string>(), r.observations.at("entity").get<std::string>()};
  }

  void learn(const std::string& name, const Located& where, bool category)
  {
    auto& k = ctx_.knowledge;
    std::string object = where.entity.value_or(name);
    k.object_locations[object] = where.location;
    if (category) {
      k.object_categories[object] = name;
      k.categories.insert(name);
    }
    trace_.append("knowledge_update", ctx_.tick, {{"object", object}, {"location", where.location}, {"label", name}});
    update_ledger(planner::AddEnvironmentFact{"The " + object + " is on the " + where.location + "."});
  }

  // --- execution ----------------------------------------------------------------

  bool execute_plan()
  {
    while (!end_ && pc_ < plan_.calls.size()) {
      if (out_of_ticks()) return false;
      const auto call = plan_.calls[pc_];
      const auto r = skills::execute_skill(ctx_, call);
      if (r.success) {
        ++pc_;
        retries_ = 0;
        continue;
      }
      handle_skill_failure(call, r);
    }
    return !end_;
  }

  void handle_skill_failure(const SkillCall& call, const skills::SkillResult& r)
  {
    recovery::SkillEvidence evidence{call, r};
    auto ev = failure(evidence);
    auto st = state();
    st.retries_for_call = retries_;
    auto action = recovery::recover(ev, st, sc_.budget);

    if (action.kind == ActionKind::RETRY_SKILL) {
      ++retries_;
      record(ev, action);
      return;
    }
    if (action.kind == ActionKind::ASK_LOCATION || action.kind == ActionKind::SUGGEST_AND_VISIT ||
        action.kind == ActionKind::ASK_OPERATOR_REPHRASE) {
      // Retries could not find it where the plan said: the plan's information was wrong.
      const auto label = find_label(call);
      const bool category = call.function == "find_category_name_objects";
      auto m1 = failure(recovery::GroundingEvidence{call.origin, planner::GroundingReason::UNKNOWN_OBJECT_LOCATION, label, false});
      auto found = locate_object(m1, label, category);
      if (!found) return;
      learn(label, *found, category);
      resume_at(*found, call, label);
      return;
    }
    if (action.kind == ActionKind::ALTERNATIVE_STEPS) {
      ++replans_;
      alternative_steps(ev, action, call);
      return;
    }
    record(ev, action);
  }

  // The object is at `where`: go there, look again, and fetch it from there.
  void resume_at(const Located& where, const SkillCall& failed, const std::string& label)
  {
    Plan retargeted = plan_;
    for (std::size_t i = pc_ + 1; i < retargeted.calls.size(); ++i) {
      auto& c = retargeted.calls[i];
      if (c.function == "pick" && text::to_lower(c.arg("object")) == text::to_lower(label)) c.args["location"] = where.location;
    }
    SkillCall find = failed;
    find.args.erase("room");
    SkillCall go{"go_to_location", {{"location", where.location}}, failed.origin};
    try {
      auto spliced = recovery::splice_plan(retargeted, pc_, {go, find}, ctx_.knowledge);
      const auto at = pc_;
      plan_ = std::move(spliced);
      retries_ = 0;
      trace_.append("plan", ctx_.tick, {{"origin", "splice"}, {"at", at}, {"plan", to_plain(planner::plan_to_json(plan_))}});
    } catch (const recovery::SpliceRejected& e) {
      trace_.append("validation", ctx_.tick, e.report.to_json());
      finish(Terminal::give_up, e.what());
    }
  }

  void alternative_steps(const FailureEvent& ev, RecoveryAction action, const SkillCall& call)
  {
    const auto room = ctx_.world.robot_room();
    const auto key = planner::describe(call);
    const int attempt = alt_attempts_[key]++;
    const auto prompt = recovery::render_recovery_prompt(
        {decomposition_.task.empty() ? command_ : decomposition_.task, recovery::action_phrase(call), "in the " + room});

    json payload = {{"prompt", prompt},
                    {"failed_call", {{"function", call.function}, {"args", call.args}}},
                    {"attempt", attempt},
                    {"robot_room", room},
                    {"robot_at", ctx_.world.robot.at}};
    std::vector<std::string> adjacent;
    if (auto it = ctx_.knowledge.adjacency.find(room); it != ctx_.knowledge.adjacency.end())
      adjacent.assign(it->second.begin(), it->second.end());
    payload["adjacent_rooms"] = adjacent;
    if (!call.arg("location").empty()) payload["location_room"] = ctx_.knowledge.room_of(call.arg("location"));

    action.params["prompt"] = prompt;
    action.params["attempt"] = attempt;
    const auto resp = planner::exchange(ctx_.link, ctx_.ledger, lm::RequestKind::RECOVERY_STEPS, payload);
    std::vector<std::string> steps;
    if (resp.ok()) steps = resp.result.at("steps").get<std::vector<std::string>>();
    action.params["steps"] = steps;
    record(ev, action);
    if (steps.empty()) {
      record(ev, {ActionKind::GIVE_UP, {{"reason", "no alternative steps for " + key}}});
      return;
    }
    auto grounded = planner::ground(planner::make_steps(steps), ctx_.ledger, ctx_.link, ctx_.knowledge,
                                    ctx_.world.robot.at, command_);
    if (auto* gf = std::get_if<planner::GroundingFailure>(&grounded)) {
      record(ev, {ActionKind::GIVE_UP, {{"reason", "alternative steps did not ground: " + gf->message}}});
      return;
    }
    auto calls = std::get<Plan>(grounded).calls;
    for (auto& c : calls) c.origin = call.origin;
    try {
      const auto at = pc_;
      plan_ = recovery::splice_plan(plan_, pc_, calls, ctx_.knowledge);
      retries_ = 0;
      trace_.append("plan", ctx_.tick, {{"origin", "splice"}, {"at", at}, {"plan", to_plain(planner::plan_to_json(plan_))}});
    } catch (const recovery::SpliceRejected& e) {
      trace_.append("validation", ctx_.tick, e.report.to_json());
      record(ev, {ActionKind::GIVE_UP, {{"reason", e.what()}}});
    }
  }

  // --- completion ---------------------------------------------------------------

  // True when the episode is over.
  bool confirm_completion()
  {
    const auto turn = skills::ask(ctx_, world::kOperator, dialogue::kCompletionQuestion);
    const auto verdict = dialogue::verdict_from_answer(turn.corrected_text, opt_.strict_verdict);
    trace_.append("verdict", ctx_.tick,
                  {{"completed", verdict.completed}, {"feedback", verdict.feedback}, {"no_response", verdict.no_response}});
    if (verdict.no_response && verdict.completed)
      trace_.append("warning", ctx_.tick, {{"message", "no answer to the completion question; assuming completed"}});
    if (verdict.completed) {
      skills::say(ctx_, "Thank you.");
      finish(Terminal::success, "task completed");
      return true;
    }

    auto ev = failure(recovery::VerdictEvidence{verdict.feedback});
    auto action = recovery::recover(ev, state(), sc_.budget);
    if (action.kind != ActionKind::UPDATE_LEDGER_AND_REPLAN) {
      record(ev, action);
      return true;
    }
    ++replans_;
    ++queries_;
    const auto question = "Sorry. What is the name and color of the object you wanted?";
    const auto answer = skills::ask(ctx_, world::kOperator, question, true);
    action.params["question"] = question;
    action.params["answer"] = answer.corrected_text ? json(*answer.corrected_text) : json("NO_RESPONSE");
    update_ledger(planner::AddFeedback{"Operator feedback: " + verdict.feedback});
    const auto& slots = decomposition_.frame.value("slots", json::object());
    const auto label = slots.contains("object") ? slots.at("object").get<std::string>()
                                                : slots.value("category", std::string());
    if (answer.corrected_text && !label.empty()) {
      update_ledger(planner::AddPerceptionEntry{
          perception::PromptEntry::make(text::to_lower(label), "a photo of " + text::to_lower(*answer.corrected_text))});
    }
    record(ev, action);
    return false;
  }

  const Scenario& sc_;
  const EpisodeOptions& opt_;
  Trace trace_;
  skills::Context ctx_;
  long tick_budget_ = 200;

  std::string command_;
  planner::Decomposition decomposition_;
  Plan plan_;
  std::size_t pc_ = 0;
  int retries_ = 0;
  int replans_ = 0;
  int queries_ = 0;
  int recoveries_ = 0;
  std::map<std::string, int> alt_attempts_;
  std::set<std::string> modes_;
  std::optional<EpisodeEnd> end_;
};

}  // namespace

std::string to_string(Terminal t)
{
  switch (t) {
    case Terminal::success: return "success";
    case Terminal::give_up: return "give_up";
    case Terminal::tick_exhausted: return "tick_exhausted";
  }
  return "?";
}

json ScoreSheet::to_json() const
{
  return {{"transcription_awarded", transcription_awarded},
          {"transcription_points", transcription_points},
          {"completion_points", completion_points},
          {"help_requests", help_requests},
          {"total", total},
          {"items", items}};
}

json EpisodeResult::summary() const
{
  return {{"status", to_string(status)},
          {"reason", reason},
          {"modes", std::vector<std::string>(modes.begin(), modes.end())},
          {"recoveries", recoveries},
          {"score", score.total},
          {"help_requests", score.help_requests}};
}

EpisodeResult run_episode(const Scenario& scenario, const EpisodeOptions& options)
{
  std::unique_ptr<lm::Backend> owned;
  lm::Backend* backend = options.backend;
  if (!backend) {
    owned = std::make_unique<lm::MockBackend>(scenario.commonsense);
    backend = owned.get();
  }
  Runner runner(scenario, options, *backend);
  return runner.run();
}

ScoreSheet score_episode(const std::vector<json>& events, const ScoreRules& rules)
{
  ScoreSheet sheet;
  std::map<std::string, std::string> slots;
  std::optional<std::string> transcript;
  std::optional<std::string> status;
  for (const auto& e : events) {
    const auto type = e.value("type", "");
    if (type == "episode_start") slots = e.value("slots", std::map<std::string, std::string>{});
    if (type == "transcript" && !transcript) transcript = e.value("text", "");
    if (type == "dialogue" && e.value("help", false)) ++sheet.help_requests;
    if (type == "episode_end") status = e.value("status", "");
  }
  if (!status) throw PreconditionError("score_episode: the trace has no terminal event");

  bool all = transcript.has_value();
  for (const auto& [slot, value] : slots) {
    if (!transcript || !text::contains_phrase(*transcript, value)) all = false;
  }
  sheet.transcription_awarded = all;
  if (all) {
    sheet.transcription_points = rules.transcription_points;
    sheet.items.push_back({{"item", "transcription"}, {"points", rules.transcription_points}});
  }
  if (*status == "success") {
    sheet.completion_points = rules.completion_points * std::pow(rules.help_penalty, sheet.help_requests);
    sheet.items.push_back({{"item", "completion"}, {"points", rules.completion_points}});
    if (sheet.help_requests > 0)
      sheet.items.push_back({{"item", "help_penalty"},
                             {"requests", sheet.help_requests},
                             {"points", sheet.completion_points - rules.completion_points}});
  }
  sheet.total = sheet.transcription_points + sheet.completion_points;
  return sheet;
}

ExpectationCheck check_expectations(const Scenario& scenario, const EpisodeResult& result)
{
  ExpectationCheck c;
  const bool success = result.status == Terminal::success;
  if (success != scenario.expected.completion) {
    c.failures.push_back("expected " + std::string(scenario.expected.completion ? "success" : "no success") + ", got " +
                         to_string(result.status) + " (" + result.reason + ")");
  }
  if (result.modes != scenario.expected.modes) {
    auto fmt = [](const std::set<std::string>& s) { return "{" + text::join({s.begin(), s.end()}, ",") + "}"; };
    c.failures.push_back("modes " + fmt(result.modes) + " != expected " + fmt(scenario.expected.modes));
  }
  if (auto miss = match_events(scenario.expected.events, result.trace.events()))
    c.failures.push_back("trace has no event matching " + scenario.expected.events[*miss].dump() + " in order");
  c.pass = c.failures.empty();
  return c;
}

}  // namespace gpsr::harness
