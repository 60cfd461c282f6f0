#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

#include "gpsr/error.hpp"
#include "gpsr/ledger.hpp"

namespace gpsr::lm {

enum class RequestKind { DECOMPOSE, GROUND, SUGGEST_LOCATIONS, EXTRACT_SLOT, RECOVERY_STEPS, ANSWER_QUESTION };

std::string to_string(RequestKind k);
RequestKind request_kind_from(const std::string& s);

struct BackendRequest {
  RequestKind kind = RequestKind::DECOMPOSE;
  std::string prompt;
  nlohmann::json payload = nlohmann::json::object();
};

// A structured refusal from the model side (CANNOT_PARSE, AMBIGUOUS_STEP, NO_MATCH, ...).
// Transport problems are exceptions, not responses.
struct BackendFailure {
  std::string code;
  std::string message;
  nlohmann::json detail = nlohmann::json::object();
};

struct BackendResponse {
  nlohmann::json result = nlohmann::json::object();
  std::optional<double> confidence;
  std::string raw;
  std::optional<BackendFailure> failure;

  bool ok() const { return !failure.has_value(); }
  nlohmann::json to_json() const;
};

class BackendTimeout : public Error {
public:
  explicit BackendTimeout(const std::string& m) : Error("BACKEND_TIMEOUT", m) {}
};
class BackendTransportError : public Error {
public:
  explicit BackendTransportError(const std::string& m) : Error("BACKEND_TRANSPORT", m) {}
};
class MalformedCompletion : public Error {
public:
  explicit MalformedCompletion(const std::string& m) : Error("BACKEND_MALFORMED", m) {}
};

class Backend {
public:
  virtual ~Backend() = default;
  virtual BackendResponse respond(const BackendRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Preamble, environment facts, worked examples, feedback lines, then the request payload.
// Empty sections are left out.
std::string render_prompt(const planner::PromptLedger& ledger, RequestKind kind, const nlohmann::json& payload);

// Checks a successful response against the result shape expected for `kind`; throws
// MalformedCompletion naming the problem.
void check_result_shape(RequestKind kind, const nlohmann::json& result);

}  // namespace gpsr::lm
