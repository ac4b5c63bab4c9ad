#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gr/featurize/incidents.hpp"
#include "gr/forest/bundle.hpp"
#include "gr/simstore/store.hpp"
#include "gr/telemetry/guide_csv.hpp"

namespace gr {

// Files under the data directory (GR_DATA_DIR).
struct DataLayout {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.txt"; }
  std::filesystem::path telemetry() const { return root / "telemetry"; }
  std::filesystem::path labels() const { return root / "labels.tsv"; }
  std::filesystem::path registry() const { return root / "registry"; }
  std::filesystem::path embeddings() const { return root / "embeddings"; }
  std::filesystem::path journal() const { return root / "journal.jsonl"; }
  std::filesystem::path backfill_state() const { return root / "backfill.state"; }
  std::filesystem::path reports() const { return root / "reports"; }

  // Uses `override_root` when given, else $GR_DATA_DIR, else "./gr-data".
  static DataLayout resolve(const std::optional<std::filesystem::path>& override_root = std::nullopt);
};

struct TelemetrySet {
  std::vector<AlertRecord> alerts;
  IngestStats stats;
  std::size_t files = 0;
  std::size_t duplicate_alerts = 0;  // same AlertId in more than one file; first kept
};

// Ingests every *.csv in the directory in file-name order.
TelemetrySet load_telemetry(const std::filesystem::path& dir, IngestLimits limits = {});

std::vector<EncodedAlert> encode_all(const EncoderModel& encoder, const std::vector<AlertRecord>& alerts);

// Row key for forest training data, stable across runs.
std::uint64_t row_key(std::string_view id);

// Incident embedding in the triage bundle's space, tagged with the incident grade.
EmbeddingEntry make_entry(const IncidentRecord& incident, const ModelBundle& triage);

// Forms incidents (graded or not) from `alerts`, embeds them with the triage
// bundle and upserts those no older than now - horizon. Switches the store to
// the bundle's space first when it differs.
struct EmbedOutcome {
  UpsertResult upsert;
  std::size_t incidents = 0;
  std::size_t too_old = 0;
  bool store_reset = false;
};
EmbedOutcome embed_incidents(const std::vector<AlertRecord>& alerts, const ModelBundle& triage, EmbeddingStore& store,
                             std::size_t cap, Seconds horizon, Timestamp now, bool require_grade);

// Puts the store in the bundle's embedding space; true when it was reset.
bool ensure_space(EmbeddingStore& store, const ModelBundle& triage);

}  // namespace gr
