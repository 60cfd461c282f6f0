#include "gpsr/speech.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "gpsr/error.hpp"
#include "gpsr/text.hpp"

namespace gpsr::speech {

using nlohmann::json;

std::string normalize_phrase(const std::string& phrase)
{
  return text::collapse_spaces(text::to_lower(text::trim(phrase)));
}

namespace {

bool add_to(std::set<std::string>& set, const std::string& phrase)
{
  auto p = normalize_phrase(phrase);
  if (p.empty()) return false;
  return set.insert(std::move(p)).second;
}

// Frequent English words plus the command vocabulary of the benchmark grammar. These are
// never snapped to lexicon entries.
const std::set<std::string>& common_words()
{
  static const std::set<std::string> kWords = {
      "a", "about", "after", "again", "all", "am", "an", "and", "answer", "any", "anything", "are", "arm",
      "around", "as", "ask", "at", "back", "be", "been", "before", "bought", "bring", "but", "by", "can",
      "carry", "close", "come", "could", "count", "day", "describe", "did", "dinner", "do", "does", "done",
      "door", "dressed", "drink", "each", "eat", "every", "everyone", "feel", "fetch", "find", "for", "from",
      "get", "give", "go", "going", "grab", "grasp", "guide", "had", "hand", "has", "have", "he", "hello",
      "help", "her", "here", "hey", "hi", "him", "his", "home", "how", "hsr", "hungry", "i", "if", "in",
      "into", "is", "it", "it's", "its", "just", "know", "knows", "lead", "like", "locate", "look", "lost",
      "lunch", "lying", "make", "many", "may", "maybe", "me", "mean", "might", "mine", "misplaced", "moment",
      "more", "my", "need", "no", "not", "now", "number", "of", "offer", "on", "one", "open", "operator",
      "or", "other", "our", "out", "over", "people", "person", "pick", "place", "please", "pose", "prepare",
      "put", "question", "raising", "ready", "rest", "retrieve", "robot", "said", "saw", "say", "see", "she",
      "sitting", "so", "some", "something", "speak", "standing", "start", "starting", "take", "tell",
      "thank", "thanks", "that", "the", "their", "them", "then", "there", "they", "thing", "think",
      "this", "tired", "to", "today", "tonight", "up", "us", "want", "wants", "was", "we", "what", "when",
      "where", "which", "white", "who", "whom", "will", "with", "would", "yes", "you", "your", "getting",
      "where's", "bit", "sure", "yeah", "idea", "wrong", "right", "that's", "fruit", "object", "objects",
      "color", "colour", "red", "green", "blue", "yellow", "black", "brown", "orange", "pink", "purple",
      "gray", "grey", "other", "day", "days", "ago", "there's", "wait", "sorry", "okay", "ok", "again",
      "should", "bed-time", "evening", "morning", "food", "meal", "ready", "cold", "hot", "drinks",
      "follow", "these", "those", "kind", "type", "round", "big", "small", "large", "tall", "short",
      "thirsty", "sleepy", "very", "much", "also", "too", "only", "well", "let", "let's", "once"};
  return kWords;
}

// Per-word spans, so substitutions keep surrounding punctuation intact.
struct WordSpan {
  std::size_t begin;
  std::size_t end;
};

std::vector<WordSpan> word_spans(const std::string& s)
{
  std::vector<WordSpan> out;
  std::size_t i = 0;
  const auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
  };
  while (i < s.size()) {
    if (!is_word(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word(s[j])) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

}  // namespace

bool TranscriptionLexicon::add_object(const std::string& phrase) { return add_to(objects_, phrase); }
bool TranscriptionLexicon::add_person(const std::string& phrase) { return add_to(persons_, phrase); }
bool TranscriptionLexicon::add_location(const std::string& phrase) { return add_to(locations_, phrase); }

std::set<std::string> TranscriptionLexicon::phrases() const
{
  std::set<std::string> out = objects_;
  out.insert(persons_.begin(), persons_.end());
  out.insert(locations_.begin(), locations_.end());
  return out;
}

std::set<std::string> TranscriptionLexicon::tokens() const
{
  std::set<std::string> out;
  for (const auto& p : phrases()) {
    for (auto& w : text::words(p)) out.insert(std::move(w));
  }
  return out;
}

json TranscriptionLexicon::to_json() const
{
  return {{"objects", objects_}, {"persons", persons_}, {"locations", locations_}};
}

TranscriptionLexicon TranscriptionLexicon::from_json(const json& j)
{
  TranscriptionLexicon lex;
  if (j.is_null()) return lex;
  if (!j.is_object()) throw SchemaError("lexicon: expected object");
  for (const auto& p : j.value("objects", json::array())) lex.add_object(p.get<std::string>());
  for (const auto& p : j.value("persons", json::array())) lex.add_person(p.get<std::string>());
  for (const auto& p : j.value("locations", json::array())) lex.add_location(p.get<std::string>());
  return lex;
}

void ConfusionTable::add(const std::string& token, const std::string& heard)
{
  const auto t = text::to_lower(token);
  const auto h = text::to_lower(heard);
  if (t == h) throw SchemaError("confusion table: token '" + t + "' may not map to itself");
  auto& list = entries_[t];
  if (std::find(list.begin(), list.end(), h) == list.end()) list.push_back(h);
}

json ConfusionTable::to_json() const { return entries_; }

ConfusionTable ConfusionTable::from_json(const json& j)
{
  ConfusionTable table;
  if (!j.is_object()) throw SchemaError("confusion table: expected object token -> [heard]");
  for (const auto& [token, heard] : j.items()) {
    if (!heard.is_array()) throw SchemaError("confusion table." + token + ": expected array");
    for (const auto& h : heard) table.add(token, h.get<std::string>());
  }
  return table;
}

std::string corrupt_utterance(const std::string& true_text, const ConfusionTable& table, std::uint64_t seed,
                              double rate)
{
  if (rate < 0.0 || rate > 1.0) throw PreconditionError("corrupt_utterance: rate must be in [0,1]");
  std::mt19937_64 rng(seed);
  std::string out;
  std::size_t cursor = 0;
  for (const auto& span : word_spans(true_text)) {
    out.append(true_text, cursor, span.begin - cursor);
    cursor = span.end;
    const std::string word = true_text.substr(span.begin, span.end - span.begin);
    const auto it = table.entries().find(text::to_lower(word));
    if (it == table.entries().end() || it->second.empty()) {
      out += word;
      continue;
    }
    // 53-bit uniform in [0,1), then an index draw; both consume the generator in a fixed order.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const std::size_t pick = static_cast<std::size_t>(rng() % it->second.size());
    out += u < rate ? it->second[pick] : word;
  }
  out.append(true_text, cursor, std::string::npos);
  return out;
}

std::string consonant_skeleton(const std::string& word)
{
  std::string out;
  for (char c : text::to_lower(word)) {
    if (!std::isalpha(static_cast<unsigned char>(c))) continue;
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') continue;
    out.push_back(c);
  }
  return out;
}

bool is_common_word(const std::string& word) { return common_words().count(text::to_lower(word)) > 0; }

Transcript transcribe(const std::string& heard_text, const TranscriptionLexicon& lexicon,
                      const TranscriberConfig& config)
{
  Transcript result;
  if (lexicon.empty()) {
    result.text = heard_text;
    return result;
  }
  struct Candidate {
    std::string token;
    std::string skeleton;
  };
  std::vector<Candidate> candidates;
  const auto lex_tokens = lexicon.tokens();
  for (const auto& t : lex_tokens) {
    auto sk = consonant_skeleton(t);
    if (!sk.empty()) candidates.push_back({t, std::move(sk)});
  }

  std::string out;
  std::size_t cursor = 0;
  for (const auto& span : word_spans(heard_text)) {
    out.append(heard_text, cursor, span.begin - cursor);
    cursor = span.end;
    const std::string word = heard_text.substr(span.begin, span.end - span.begin);
    const std::string lower = text::to_lower(word);
    if (lex_tokens.count(lower) || is_common_word(lower)) {
      out += word;
      continue;
    }
    const auto sk = consonant_skeleton(lower);
    if (sk.empty()) {
      out += word;
      continue;
    }
    const std::size_t limit =
        std::max(config.min_threshold, (sk.size() + config.threshold_divisor - 1) / config.threshold_divisor);
    std::size_t best = limit + 1;
    std::vector<const Candidate*> nearest;
    for (const auto& c : candidates) {
      if (c.skeleton.front() != sk.front()) continue;
      const auto d = text::edit_distance(sk, c.skeleton);
      if (d > limit) continue;
      if (d < best) {
        best = d;
        nearest.clear();
      }
      if (d == best) nearest.push_back(&c);
    }
    out += nearest.size() == 1 ? nearest.front()->token : word;
  }
  out.append(heard_text, cursor, std::string::npos);
  result.text = std::move(out);
  for (const auto& phrase : lexicon.phrases()) {
    if (text::contains_phrase(result.text, phrase)) result.recovered_slots.insert(phrase);
  }
  return result;
}

}  // namespace gpsr::speech
