#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "gr/pipeline/engine.hpp"

namespace gr {

nlohmann::json alert_to_json(const AlertRecord& alert);

// JSON over HTTP:
//   GET  /health
//   GET  /incidents?offset=0&limit=50&sort=key|age|score
//   GET  /incidents/{org:incident}
//   POST /feedback            (actor from the X-Actor-Id header)
//   POST /labels              {"labels": [{"incident_key", "grade"} | {"alert_id", "action"}]}
//   GET  /metrics
//   POST /admin/run/train     ?now=RFC3339
//   POST /admin/run/infer     ?window_end=RFC3339
//   POST /admin/run/backfill  ?steps=N&now=RFC3339
// Errors are {"error": <code>, "message": <text>[, "field": <name>]}.
class ApiServer {
 public:
  explicit ApiServer(Engine& engine);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and returns the port (an ephemeral one when port == 0); -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); returns false if the socket failed.
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gr
