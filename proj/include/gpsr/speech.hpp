#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gpsr::speech {

// Prior knowledge handed to the transcriber: names that may appear in commands.
// Phrases are stored lowercase and whitespace-normalized.
class TranscriptionLexicon {
public:
  TranscriptionLexicon() = default;

  // Returns true when the phrase was new.
  bool add_object(const std::string& phrase);
  bool add_person(const std::string& phrase);
  bool add_location(const std::string& phrase);

  const std::set<std::string>& object_names() const { return objects_; }
  const std::set<std::string>& person_names() const { return persons_; }
  const std::set<std::string>& location_names() const { return locations_; }

  std::set<std::string> phrases() const;
  std::set<std::string> tokens() const;
  bool empty() const { return objects_.empty() && persons_.empty() && locations_.empty(); }

  nlohmann::json to_json() const;
  static TranscriptionLexicon from_json(const nlohmann::json& j);

  bool operator==(const TranscriptionLexicon&) const = default;

private:
  std::set<std::string> objects_, persons_, locations_;
};

std::string normalize_phrase(const std::string& phrase);

// token -> confusable heard tokens (bed -> band, bat).
class ConfusionTable {
public:
  void add(const std::string& token, const std::string& heard);
  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

  nlohmann::json to_json() const;
  static ConfusionTable from_json(const nlohmann::json& j);

private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Replaces each token that has a confusion entry with probability `rate`. Deterministic in
// `seed`; text outside replaced words is preserved byte for byte.
std::string corrupt_utterance(const std::string& true_text, const ConfusionTable& table, std::uint64_t seed,
                              double rate);

struct TranscriberConfig {
  std::size_t threshold_divisor = 3;
  std::size_t min_threshold = 1;
};

struct Transcript {
  std::string text;
  std::set<std::string> recovered_slots;
};

// Lexicon-biased correction of a heard utterance. Out-of-lexicon, non-common tokens are
// snapped to the unique nearest lexicon token by consonant-skeleton edit distance.
Transcript transcribe(const std::string& heard_text, const TranscriptionLexicon& lexicon,
                      const TranscriberConfig& config = {});

// Lowercase word with vowels and punctuation removed ("bedroom" -> "bdrm").
std::string consonant_skeleton(const std::string& word);

bool is_common_word(const std::string& word);

}  // namespace gpsr::speech
