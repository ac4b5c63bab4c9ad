#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gr/telemetry/types.hpp"

namespace gr {

// Customer labels layered over ingested telemetry. Analyst feedback lands
// here and is applied to alerts before every train cycle.
class LabelOverlay {
 public:
  // Returns true when the stored label changed.
  bool set_incident_grade(const std::string& org_id, const std::string& incident_id, Grade grade);
  bool set_alert_action(const std::string& alert_id, Action action);

  std::optional<Grade> incident_grade(const std::string& org_id, const std::string& incident_id) const;
  std::optional<Action> alert_action(const std::string& alert_id) const;

  // Overwrites grade/action on matching alerts; returns the number of label
  // fields written.
  std::size_t apply(std::vector<AlertRecord>& alerts) const;

  std::size_t size() const { return grades_.size() + actions_.size(); }

  std::string serialize() const;
  static LabelOverlay parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  // A missing file yields an empty overlay.
  static LabelOverlay load(const std::filesystem::path& path);

  bool operator==(const LabelOverlay&) const = default;

 private:
  std::map<std::pair<std::string, std::string>, Grade> grades_;
  std::map<std::string, Action> actions_;
};

}  // namespace gr
