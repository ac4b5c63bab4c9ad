#include "gr/pipeline/data.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "gr/common/digest.hpp"

namespace fs = std::filesystem;

namespace gr {

DataLayout DataLayout::resolve(const std::optional<fs::path>& override_root) {
  if (override_root) return {*override_root};
  if (const char* env = std::getenv("GR_DATA_DIR"); env && *env) return {fs::path(env)};
  return {fs::path("gr-data")};
}

TelemetrySet load_telemetry(const fs::path& dir, IngestLimits limits) {
  TelemetrySet set;
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(dir, ec)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::unordered_set<std::string> seen;
  for (const auto& path : files) {
    auto result = ingest_guide_csv(path, limits);
    ++set.files;
    auto& s = set.stats;
    s.rows_read += result.stats.rows_read;
    s.evidence_rows += result.stats.evidence_rows;
    s.malformed_rows += result.stats.malformed_rows;
    s.timestamp_errors += result.stats.timestamp_errors;
    s.unknown_entity_types += result.stats.unknown_entity_types;
    s.unknown_severities += result.stats.unknown_severities;
    s.unparsed_grades += result.stats.unparsed_grades;
    s.unparsed_actions += result.stats.unparsed_actions;
    for (auto& alert : result.alerts) {
      if (!seen.insert(alert.alert_id).second) {
        ++set.duplicate_alerts;
        continue;
      }
      set.alerts.push_back(std::move(alert));
    }
  }
  if (set.duplicate_alerts) spdlog::warn("{} alerts repeated across telemetry files were skipped", set.duplicate_alerts);
  return set;
}

std::vector<EncodedAlert> encode_all(const EncoderModel& encoder, const std::vector<AlertRecord>& alerts) {
  std::vector<EncodedAlert> out;
  out.reserve(alerts.size());
  for (const auto& a : alerts) out.push_back(encoder.encode(a));
  return out;
}

std::uint64_t row_key(std::string_view id) { return fnv1a64(id); }

bool ensure_space(EmbeddingStore& store, const ModelBundle& triage) {
  const auto digest = triage.pca.digest();
  if (store.space_id() == digest && store.dimension() == triage.pca.components()) return false;
  store.reset(digest, triage.pca.components());
  return true;
}

EmbeddingEntry make_entry(const IncidentRecord& incident, const ModelBundle& triage) {
  EmbeddingEntry e;
  e.org_id = incident.org_id;
  e.incident_id = incident.incident_id;
  e.incident_hash = incident.incident_hash;
  e.grade = incident.grade;
  e.embedding = triage.pca.transform(incident.feature_vector(triage.encoder.one_hot_dimension()));
  e.timestamp = incident.latest;
  return e;
}

EmbedOutcome embed_incidents(const std::vector<AlertRecord>& alerts, const ModelBundle& triage, EmbeddingStore& store,
                             std::size_t cap, Seconds horizon, Timestamp now, bool require_grade) {
  EmbedOutcome out;
  out.store_reset = ensure_space(store, triage);
  const auto encoded = encode_all(triage.encoder, alerts);
  const auto incidents = form_incidents(encoded, require_grade);
  out.incidents = incidents.size();
  std::vector<EmbeddingEntry> entries;
  entries.reserve(incidents.size());
  for (const auto& inc : incidents) {
    if (inc.latest < now - horizon) {
      ++out.too_old;
      continue;
    }
    entries.push_back(make_entry(inc, triage));
  }
  out.upsert = store.upsert(entries, cap);
  return out;
}

}  // namespace gr
