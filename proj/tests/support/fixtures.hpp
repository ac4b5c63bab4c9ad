#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "gr/telemetry/types.hpp"

namespace fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "gr") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline gr::EvidenceRecord evidence(gr::EntityType type, std::string role = "Related") {
  gr::EvidenceRecord e;
  e.entity_type = type;
  e.evidence_role = std::move(role);
  return e;
}

inline gr::AlertRecord alert(std::string id, std::string org, std::string incident, std::string detector,
                             std::int64_t unix_time, std::optional<gr::Grade> grade = std::nullopt) {
  gr::AlertRecord a;
  a.alert_id = std::move(id);
  a.org_id = std::move(org);
  a.incident_id = std::move(incident);
  a.detector_id = std::move(detector);
  a.product_id = "p1";
  a.category = "InitialAccess";
  a.alert_title = "t1";
  a.severity = 1;
  a.timestamp = gr::from_unix(unix_time);
  a.grade = grade;
  return a;
}

}  // namespace fixture
