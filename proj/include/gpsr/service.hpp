#pragma once

#include <memory>
#include <string>

namespace gpsr::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string data_dir;
  std::string scenario_dir;                      // defaults to <data_dir>/scenarios
  std::string default_world = "worlds/household.json";
  std::string default_ledger = "ledgers/tuned.json";
  std::string trace_dir;                         // finished traces are written here when set
  std::string console_dir;                       // static console bundle, mounted at /console
  double operator_timeout_seconds = 60.0;
  double max_poll_seconds = 25.0;
};

// Session API over HTTP:
//   POST /sessions {scenario?|world?}           -> {id, state}
//   GET  /sessions/{id}                         -> {id, state, question?, cursor}
//   POST /sessions/{id}/utterance {text}        command or answer, depending on state
//   GET  /sessions/{id}/events?cursor=N&wait=S  -> {events, next_cursor, state}
//   POST /sessions/{id}/verdict {completed, feedback?}
//   GET  /sessions/{id}/trace                   canonical trace, one event per line
// Errors are {"error": {"code", "message"}}.
class Service {
public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket; returns the bound port. Throws PreconditionError on failure.
  int bind();
  // Serves on a background thread until stop().
  void start();
  // Blocks serving on the calling thread until stop().
  void run();
  // Stops accepting requests, releases waiting episodes and joins them, persists traces.
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gpsr::service
