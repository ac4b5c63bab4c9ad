#include "gr/service/feedback.hpp"

#include <map>
#include <set>

namespace gr {

FeedbackLabelResult apply_feedback_as_labels(const std::vector<FeedbackRecord>& feedback, const JournalStore& journal,
                                             const std::vector<AlertRecord>& alerts, LabelOverlay& overlay) {
  std::map<std::string, std::vector<std::string>> incident_alerts;
  std::set<std::string> alert_ids;
  for (const auto& a : alerts) {
    incident_alerts[incident_key(a.org_id, a.incident_id)].push_back(a.alert_id);
    alert_ids.insert(a.alert_id);
  }

  FeedbackLabelResult result;
  for (const auto& f : feedback) {
    if (!f.grade && !f.action) {
      ++result.without_labels;
      continue;
    }
    auto members = incident_alerts.find(f.rec.incident_key);
    if (members == incident_alerts.end()) {
      ++result.dangling;
      continue;
    }
    if (f.grade) {
      const auto [org, inc] = split_incident_key(f.rec.incident_key);
      result.labels_written += overlay.set_incident_grade(org, inc, *f.grade);
    }
    if (f.action) {
      std::vector<std::string> targets;
      if (f.alert_id) {
        if (!alert_ids.count(*f.alert_id)) {
          ++result.dangling;
          continue;
        }
        targets.push_back(*f.alert_id);
      } else if (f.rec.kind == RecKind::Remediation) {
        if (const auto rec = journal.get(f.rec)) {
          for (const auto& a : std::get<RemediationRec>(*rec).alert_recs) targets.push_back(a.alert_id);
        }
      }
      if (targets.empty()) targets = members->second;
      for (const auto& id : targets) result.labels_written += overlay.set_alert_action(id, *f.action);
    }
  }
  return result;
}

}  // namespace gr
