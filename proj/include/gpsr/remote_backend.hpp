#pragma once

#include <string>

#include "gpsr/backend.hpp"

namespace gpsr::lm {

struct RemoteConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env = "GPSR_LLM_API_KEY";
  double timeout_seconds = 30.0;
  int max_retries = 1;

  static RemoteConfig from_json(const nlohmann::json& j);
};

// Chat-completion client. Each request is sent with temperature 0 and a JSON response
// format; the completion must be a JSON object of the kind's result shape, or an object
// {"error": CODE, "message": ...} for structured refusals.
class RemoteBackend : public Backend {
public:
  explicit RemoteBackend(RemoteConfig config);

  BackendResponse respond(const BackendRequest& request) override;
  std::string name() const override { return "remote"; }

  // The request body that would be sent (no credentials).
  nlohmann::json request_body(const BackendRequest& request) const;
  // Turns a chat-completion response body into a BackendResponse. Throws MalformedCompletion.
  static BackendResponse parse_completion(RequestKind kind, const std::string& body);

private:
  RemoteConfig config_;
  std::string scheme_host_;
  std::string path_prefix_;
};

}  // namespace gpsr::lm
