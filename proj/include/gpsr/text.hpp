#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the speech, perception, grammar and dialogue code.
namespace gpsr::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_spaces(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Lowercase word tokens ([a-z0-9'-]+), punctuation dropped.
std::vector<std::string> words(std::string_view s);

// True when `phrase` occurs in `text` on word boundaries (case-insensitive).
bool contains_phrase(std::string_view text, std::string_view phrase);

std::size_t edit_distance(std::string_view a, std::string_view b);
std::size_t lcs_length(std::string_view a, std::string_view b);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Content words of a description ("a photo of a tangled white rope" -> {tangled, white, rope}).
std::set<std::string> content_tags(std::string_view description);

}  // namespace gpsr::text
