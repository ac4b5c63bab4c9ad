#include "gr/pipeline/inference.hpp"

#include <unordered_map>

#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/featurize/incidents.hpp"
#include "gr/forest/forest.hpp"
#include "gr/pipeline/data.hpp"

namespace gr {

double InferenceResult::triage_coverage() const {
  return incidents ? static_cast<double>(triage_emitted) / static_cast<double>(incidents) : 0.0;
}

TriageRec score_triage(const IncidentRecord& incident, const ModelBundle& triage, Timestamp batch_end) {
  const auto x = triage.pca.transform(incident.feature_vector(triage.encoder.one_hot_dimension()));
  const auto scores = predict_scores(triage.model, x);
  const auto d = decide_from_scores(triage.model, scores);
  TriageRec rec;
  rec.org_id = incident.org_id;
  rec.incident_id = incident.incident_id;
  rec.grade = kAllGrades.at(d.predicted);
  rec.score = d.score;
  rec.scores = scores;
  rec.model_version = triage.model.version;
  rec.emitted = d.emitted;
  rec.batch_end = batch_end;
  return rec;
}

AlertActionRec score_remediation(const AlertRecord& alert, const ModelBundle& remediation, const EntityRules& rules) {
  const auto encoded = remediation.encoder.encode(alert);
  const auto x = remediation.pca.transform(remediation.encoder.feature_vector(encoded));
  const auto d = decide(remediation.model, x);
  AlertActionRec rec;
  rec.alert_id = alert.alert_id;
  rec.action = kAllActions.at(d.predicted);
  rec.score = d.score;
  rec.emitted = d.emitted;
  if (d.emitted) rec.entity = identify_entity(alert, rec.action, rules);
  return rec;
}

RemediationRec remediation_for_incident(const std::string& org_id, const std::string& incident_id,
                                        const std::vector<const AlertRecord*>& members, const ModelBundle& remediation,
                                        const EntityRules& rules, Timestamp batch_end) {
  std::vector<AlertActionRec> alert_recs;
  for (const auto* a : members) {
    auto r = score_remediation(*a, remediation, rules);
    if (r.emitted) alert_recs.push_back(std::move(r));
  }
  RemediationRec rec;
  if (alert_recs.empty()) {
    rec.org_id = org_id;
    rec.incident_id = incident_id;
    rec.model_version = remediation.model.version;
  } else {
    rec = aggregate_remediation(org_id, incident_id, std::move(alert_recs), remediation.model.version);
  }
  rec.batch_end = batch_end;
  return rec;
}

std::uint32_t update_on_evolution(JournalStore& journal, const std::vector<AlertRecord>& members,
                                  const ModelBundle& triage, Timestamp batch_end) {
  const auto incidents = form_incidents(encode_all(triage.encoder, members), false);
  if (incidents.size() != 1) throw DataError("update_on_evolution expects the alerts of exactly one incident");
  const auto rec = score_triage(incidents.front(), triage, batch_end);
  if (auto revision = journal.append_if_changed(rec)) return *revision;
  return revision_of(*journal.latest(incidents.front().key(), RecKind::Triage));
}

InferenceResult run_inference_batch(const std::vector<AlertRecord>& alerts, Timestamp window_end,
                                    const ModelBundle& triage, const ModelBundle& remediation, EmbeddingStore& store,
                                    JournalStore& journal, const EntityRules& rules, const PipelineConfig& config) {
  InferenceResult result;
  result.window_end = window_end;
  result.window_start = window_end - config.inference_window;

  std::unordered_map<std::string, std::size_t> touched;
  for (const auto& a : alerts) {
    if (a.timestamp >= result.window_start && a.timestamp < window_end) {
      ++result.window_alerts;
      touched.try_emplace(incident_key(a.org_id, a.incident_id), touched.size());
    }
  }
  if (touched.empty()) return result;

  // Full recompute: every known member before the window end.
  std::vector<AlertRecord> members;
  std::vector<std::vector<const AlertRecord*>> by_incident(touched.size());
  for (const auto& a : alerts) {
    if (a.timestamp >= window_end) continue;
    if (touched.count(incident_key(a.org_id, a.incident_id))) members.push_back(a);
  }
  for (const auto& a : members) by_incident[touched.at(incident_key(a.org_id, a.incident_id))].push_back(&a);
  result.member_alerts = members.size();

  const auto incidents = form_incidents(encode_all(triage.encoder, members), false);
  result.incidents = incidents.size();

  // Triage first so predictions can tag the stored embeddings.
  std::vector<TriageRec> triage_recs;
  std::vector<EmbeddingEntry> entries;
  triage_recs.reserve(incidents.size());
  ensure_space(store, triage);
  for (const auto& inc : incidents) {
    triage_recs.push_back(score_triage(inc, triage, window_end));
    const auto& t = triage_recs.back();
    result.triage_emitted += t.emitted;
    EmbeddingEntry e = make_entry(inc, triage);
    const auto existing = store.get(inc.org_id, inc.incident_id);
    e.grade = existing ? existing->grade : std::nullopt;  // keep analyst labels already stored
    e.predicted_grade = t.emitted ? std::optional<Grade>(t.grade) : std::nullopt;
    entries.push_back(std::move(e));
  }
  const auto upsert = store.upsert(entries, config.store_cap);
  result.embeddings_accepted = upsert.accepted;
  result.embeddings_unchanged = upsert.unchanged;

  for (std::size_t i = 0; i < incidents.size(); ++i) {
    const auto& inc = incidents[i];
    const auto& t = triage_recs[i];

    SimilarQuery q;
    q.org_id = inc.org_id;
    q.incident_id = inc.incident_id;
    q.incident_hash = inc.incident_hash;
    q.embedding = entries[i].embedding;
    q.grade_rec = t.emitted ? std::optional<Grade>(t.grade) : std::nullopt;
    q.k_max = config.similar_max;
    q.cutoff = config.cosine_cutoff;
    q.horizon = config.horizon;
    q.now = window_end;
    SimilarRec s;
    s.org_id = inc.org_id;
    s.incident_id = inc.incident_id;
    s.matches = store.find_similar(q);
    s.batch_end = window_end;
    result.similar_with_matches += !s.matches.empty();

    auto r = remediation_for_incident(inc.org_id, inc.incident_id, by_incident[touched.at(inc.key())], remediation,
                                      rules, window_end);
    result.remediation_emitted += r.emitted;
    for (const auto& target : r.actions) result.targetless_actions += target.without_target();

    for (Recommendation rec : {Recommendation(t), Recommendation(std::move(s)), Recommendation(std::move(r))}) {
      if (auto revision = journal.append_if_changed(rec)) {
        set_revision(rec, *revision);
        ++result.new_revisions;
      } else {
        set_revision(rec, revision_of(*journal.latest(incident_key_of(rec), kind_of(rec))));
      }
      result.recommendations.push_back(std::move(rec));
    }
  }
  store.prune(config.horizon, window_end);
  spdlog::info("inference [{}, {}): {} alerts, {} incidents, {} triage emitted, {} remediation emitted, {} new revisions",
               format_rfc3339(result.window_start), format_rfc3339(window_end), result.window_alerts, result.incidents,
               result.triage_emitted, result.remediation_emitted, result.new_revisions);
  return result;
}

}  // namespace gr
