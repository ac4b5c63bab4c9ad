#pragma once

#include <vector>

#include "gr/featurize/incidents.hpp"
#include "gr/forest/bundle.hpp"
#include "gr/pipeline/config.hpp"
#include "gr/pipeline/entity_rules.hpp"
#include "gr/pipeline/recommendations.hpp"
#include "gr/service/journal.hpp"
#include "gr/simstore/store.hpp"

namespace gr {

struct InferenceResult {
  Timestamp window_start{};
  Timestamp window_end{};
  std::size_t window_alerts = 0;
  std::size_t incidents = 0;
  std::size_t member_alerts = 0;
  std::size_t triage_emitted = 0;
  std::size_t remediation_emitted = 0;
  std::size_t targetless_actions = 0;
  std::size_t similar_with_matches = 0;
  std::size_t new_revisions = 0;
  std::size_t embeddings_accepted = 0;
  std::size_t embeddings_unchanged = 0;  // already stored as is
  std::vector<Recommendation> recommendations;  // current content, by incident then kind

  double triage_coverage() const;
};

// Scores one incident with the triage bundle; emission uses its thresholds.
TriageRec score_triage(const IncidentRecord& incident, const ModelBundle& triage, Timestamp batch_end);

// Per-alert remediation scores plus entity identification.
AlertActionRec score_remediation(const AlertRecord& alert, const ModelBundle& remediation, const EntityRules& rules);

// Incident-level remediation: aggregated when any alert recommendation is
// emitted, otherwise an unemitted record.
RemediationRec remediation_for_incident(const std::string& org_id, const std::string& incident_id,
                                        const std::vector<const AlertRecord*>& members, const ModelBundle& remediation,
                                        const EntityRules& rules, Timestamp batch_end);

// Re-forms the incident from `members`, re-scores it and journals a new
// revision only when the emitted grade changed. Returns the live revision.
std::uint32_t update_on_evolution(JournalStore& journal, const std::vector<AlertRecord>& members,
                                  const ModelBundle& triage, Timestamp batch_end);

// One inference batch over alerts with window_end - window <= timestamp < window_end.
// Incidents touched by the window are re-formed from every known member
// before window_end. Writes embeddings (ungraded, prediction as sidecar, cap
// s) and journals changed recommendations only, so replaying a window is a
// no-op.
InferenceResult run_inference_batch(const std::vector<AlertRecord>& alerts, Timestamp window_end,
                                    const ModelBundle& triage, const ModelBundle& remediation, EmbeddingStore& store,
                                    JournalStore& journal, const EntityRules& rules, const PipelineConfig& config);

}  // namespace gr
