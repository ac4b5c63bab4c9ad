#pragma once

#include <vector>

#include "gr/service/journal.hpp"
#include "gr/telemetry/labels.hpp"

namespace gr {

struct FeedbackLabelResult {
  std::size_t labels_written = 0;  // label fields that changed in the overlay
  std::size_t dangling = 0;        // feedback naming an incident or alert not in telemetry
  std::size_t without_labels = 0;  // feedback carrying neither grade nor action
};

// Writes analyst grades onto the referenced incident and analyst actions onto
// its alerts: the feedback's alert when given, else the alerts of the
// referenced remediation recommendation, else every alert of the incident.
// Re-applying the same feedback writes nothing.
FeedbackLabelResult apply_feedback_as_labels(const std::vector<FeedbackRecord>& feedback, const JournalStore& journal,
                                             const std::vector<AlertRecord>& alerts, LabelOverlay& overlay);

}  // namespace gr
