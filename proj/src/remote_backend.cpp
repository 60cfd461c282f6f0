#include "gpsr/remote_backend.hpp"

#include <httplib.h>

#include <cstdlib>

namespace gpsr::lm {

using nlohmann::json;

namespace {

const char* result_hint(RequestKind kind)
{
  switch (kind) {
    case RequestKind::DECOMPOSE: return R"({"steps": ["Move to the ...", "Find ..."]})";
    case RequestKind::GROUND:
      return R"({"calls": [{"function": "go_to_location", "args": {"location": "..."}, "origin": 0}]})";
    case RequestKind::SUGGEST_LOCATIONS: return R"({"locations": ["..."]})";
    case RequestKind::EXTRACT_SLOT: return R"({"value": "..."})";
    case RequestKind::RECOVERY_STEPS: return R"({"steps": ["..."]})";
    case RequestKind::ANSWER_QUESTION: return R"({"answer": "..."})";
  }
  return "{}";
}

}  // namespace

RemoteConfig RemoteConfig::from_json(const json& j)
{
  RemoteConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.max_retries = j.value("max_retries", c.max_retries);
  if (c.timeout_seconds <= 0) throw SchemaError("remote.timeout_seconds must be positive");
  if (c.max_retries < 0) throw SchemaError("remote.max_retries must be >= 0");
  return c;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config))
{
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) throw SchemaError("remote.base_url needs a scheme: '" + config_.base_url + "'");
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_ = config_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

json RemoteBackend::request_body(const BackendRequest& request) const
{
  const std::string instruction = std::string("Task kind: ") + to_string(request.kind) +
                                  ". Reply with a single JSON object shaped like " + result_hint(request.kind) +
                                  ", or {\"error\": \"CODE\", \"message\": \"...\"} if you cannot.";
  return {{"model", config_.model},
          {"temperature", 0},
          {"response_format", {{"type", "json_object"}}},
          {"messages",
           json::array({{{"role", "system"}, {"content", request.prompt}}, {{"role", "user"}, {"content", instruction}}})}};
}

BackendResponse RemoteBackend::parse_completion(RequestKind kind, const std::string& body)
{
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedCompletion(std::string("completion body is not JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc.at("choices").is_array() || doc.at("choices").empty())
    throw MalformedCompletion("completion has no choices");
  const auto& msg = doc.at("choices").at(0).value("message", json::object());
  if (!msg.contains("content") || !msg.at("content").is_string()) throw MalformedCompletion("completion has no content");
  const auto content = msg.at("content").get<std::string>();

  json result;
  try {
    result = json::parse(content);
  } catch (const json::exception&) {
    throw MalformedCompletion("completion content is not a JSON object");
  }
  BackendResponse r;
  r.raw = content;
  if (result.is_object() && result.contains("error")) {
    r.failure = BackendFailure{result.at("error").get<std::string>(), result.value("message", ""),
                               result.value("detail", json::object())};
    return r;
  }
  check_result_shape(kind, result);
  r.result = std::move(result);
  return r;
}

BackendResponse RemoteBackend::respond(const BackendRequest& request)
{
  httplib::Client cli(scheme_host_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const auto body = request_body(request).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      if (res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read) {
        if (attempt == config_.max_retries) throw BackendTimeout("remote backend: " + last_error);
      }
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw BackendTransportError("remote backend: HTTP " + std::to_string(res->status));
    return parse_completion(request.kind, res->body);
  }
  throw BackendTransportError("remote backend: " + last_error);
}

}  // namespace gpsr::lm
