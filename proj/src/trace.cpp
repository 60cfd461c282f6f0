#include "gpsr/trace.hpp"

#include <sstream>

#include "gpsr/error.hpp"

namespace gpsr::harness {

using nlohmann::json;

Trace::Trace(const Trace& other)
{
  std::lock_guard lock(other.mu_);
  events_ = other.events_;
}

Trace& Trace::operator=(const Trace& other)
{
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  events_ = other.events_;
  return *this;
}

json Trace::append(const std::string& type, long tick, json fields)
{
  if (!fields.is_object()) throw PreconditionError("trace event fields must be an object");
  Listener listener;
  {
    std::lock_guard lock(mu_);
    fields["seq"] = events_.size();
    fields["tick"] = tick;
    fields["type"] = type;
    events_.push_back(fields);
    listener = listener_;
  }
  if (listener) listener(fields);
  return fields;
}

std::vector<json> Trace::events() const
{
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<json> Trace::since(std::size_t cursor) const
{
  std::lock_guard lock(mu_);
  if (cursor >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end()};
}

std::size_t Trace::size() const
{
  std::lock_guard lock(mu_);
  return events_.size();
}

std::string Trace::serialize() const
{
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

std::vector<json> Trace::parse(const std::string& text)
{
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw SchemaError("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void Trace::set_listener(Listener listener)
{
  std::lock_guard lock(mu_);
  listener_ = std::move(listener);
}

std::vector<json> events_of(const std::vector<json>& events, const std::string& type)
{
  std::vector<json> out;
  for (const auto& e : events) {
    if (e.value("type", "") == type) out.push_back(e);
  }
  return out;
}

}  // namespace gpsr::harness
