#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpsr/backend.hpp"
#include "gpsr/knowledge.hpp"

namespace gpsr::lm {

// Deterministic stand-in for the language model. Commands go through the template grammar,
// steps through a fixed sentence table, and the rest through small rule tables.
class MockBackend : public Backend {
public:
  explicit MockBackend(CommonsenseTable commonsense, double slot_threshold = 0.6);

  BackendResponse respond(const BackendRequest& request) override;
  std::string name() const override { return "mock"; }

  const CommonsenseTable& commonsense() const { return commonsense_; }

private:
  BackendResponse decompose(const nlohmann::json& payload) const;
  BackendResponse ground(const nlohmann::json& payload) const;
  BackendResponse suggest_locations(const nlohmann::json& payload) const;
  BackendResponse extract_slot(const nlohmann::json& payload) const;
  BackendResponse recovery_steps(const nlohmann::json& payload) const;
  BackendResponse answer_question(const nlohmann::json& payload) const;

  CommonsenseTable commonsense_;
  double slot_threshold_;
};

// 2 * LCS(a, b) / (|a| + |b|) over lowercase strings; 1 for two empty strings.
double lcs_ratio(const std::string& a, const std::string& b);

// Best similarity of `candidate` against same-length word windows of `answer`.
double slot_similarity(const std::string& answer, const std::string& candidate);

struct SlotMatch {
  std::string value;
  double score = 0.0;
};

// Highest-scoring candidate strictly above `threshold`; ties go to the longer candidate,
// then the lexicographically smaller one.
std::optional<SlotMatch> best_slot_match(const std::string& answer, const std::vector<std::string>& candidates,
                                         double threshold);

}  // namespace gpsr::lm
