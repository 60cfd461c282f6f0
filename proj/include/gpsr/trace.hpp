#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace gpsr::harness {

// Ordered event log of one episode. Canonical form is one JSON object per line with
// sorted keys and no timestamps, so identical runs give identical bytes.
class Trace {
public:
  using Listener = std::function<void(const nlohmann::json& event)>;

  Trace() = default;
  Trace(const Trace& other);
  Trace& operator=(const Trace& other);

  // Adds {seq, tick, type, ...fields} and returns a copy of the stored event.
  nlohmann::json append(const std::string& type, long tick, nlohmann::json fields = nlohmann::json::object());

  std::vector<nlohmann::json> events() const;
  std::vector<nlohmann::json> since(std::size_t cursor) const;
  std::size_t size() const;

  std::string serialize() const;
  static std::vector<nlohmann::json> parse(const std::string& text);

  void set_listener(Listener listener);

private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> events_;
  Listener listener_;
};

// Events of one type, in order.
std::vector<nlohmann::json> events_of(const std::vector<nlohmann::json>& events, const std::string& type);

}  // namespace gpsr::harness
