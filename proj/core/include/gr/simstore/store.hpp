#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "gr/common/time.hpp"
#include "gr/telemetry/types.hpp"

namespace gr {

struct EmbeddingEntry {
  std::string org_id;
  std::string incident_id;
  std::string incident_hash;
  std::optional<Grade> grade;            // nullopt: stored as "ungraded"
  std::optional<Grade> predicted_grade;  // sidecar for ungraded inference-time entries
  std::vector<double> embedding;
  Timestamp timestamp{};

  // Grade used for exact same-grade matching: the label, else the prediction.
  std::optional<Grade> effective_grade() const { return grade ? grade : predicted_grade; }
  bool operator==(const EmbeddingEntry&) const = default;
};

enum class MatchKind : std::uint8_t { ExactHashSameGrade = 0, ExactHashAnyGrade = 1, Cosine = 2 };
std::string_view to_string(MatchKind kind);
std::optional<MatchKind> parse_match_kind(std::string_view text);

struct SimilarMatch {
  std::string incident_id;
  MatchKind kind = MatchKind::Cosine;
  double score = 0.0;  // 1.0 for exact kinds
  Timestamp timestamp{};
  bool operator==(const SimilarMatch&) const = default;
};

struct SimilarQuery {
  std::string org_id;
  std::string incident_id;  // excluded from results
  std::string incident_hash;
  std::vector<double> embedding;
  std::optional<Grade> grade_rec;
  std::size_t k_max = 5;
  double cutoff = 0.9;
  Seconds horizon = days(180);
  Timestamp now{};
};

struct UpsertResult {
  std::size_t accepted = 0;            // entries present after the call
  std::size_t rejected_dimension = 0;  // wrong embedding length
  std::size_t evicted = 0;             // dropped by the per-key cap, new or old
  std::size_t unchanged = 0;           // identical to the stored entry
};

// 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Incident embeddings partitioned by organization. Single writer, many
// readers; every public method takes the internal lock.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::string space_id, std::size_t k) : space_id_(std::move(space_id)), k_(k) {}
  EmbeddingStore(EmbeddingStore&& other) noexcept;
  EmbeddingStore& operator=(EmbeddingStore&& other) noexcept;

  const std::string& space_id() const { return space_id_; }
  std::size_t dimension() const { return k_; }

  // Keeps at most `cap` entries per (org, hash, grade tag), newest first, ties
  // by incident id. Upserting a known (org, incident_id) replaces it.
  UpsertResult upsert(const std::vector<EmbeddingEntry>& entries, std::size_t cap);

  // Throws DimensionError when the query length differs from the store's k.
  std::vector<SimilarMatch> find_similar(const SimilarQuery& query) const;

  // Drops entries older than now - horizon. Returns the number removed.
  std::size_t prune(Seconds horizon, Timestamp now);

  // Empties the store and switches to another embedding space.
  void reset(std::string space_id, std::size_t k);

  std::size_t size() const;
  std::vector<std::string> orgs() const;
  std::vector<EmbeddingEntry> entries(const std::string& org_id) const;
  std::optional<EmbeddingEntry> get(const std::string& org_id, const std::string& incident_id) const;
  std::size_t key_count(const std::string& org_id, const std::string& hash, std::optional<Grade> grade) const;
  std::size_t max_key_multiplicity() const;

  // One little-endian file per org plus space.txt; changed orgs are rewritten
  // atomically, orgs that became empty are deleted.
  void save(const std::filesystem::path& dir);
  static EmbeddingStore load(const std::filesystem::path& dir);  // empty store when dir is missing

 private:
  using Key = std::pair<std::string, int>;  // (hash, grade tag)
  struct Partition {
    std::map<std::string, EmbeddingEntry> by_incident;
    std::map<Key, std::vector<std::string>> by_key;
    bool dirty = false;
  };

  void erase_locked(Partition& p, const std::string& incident_id);

  mutable std::shared_mutex mutex_;
  std::string space_id_;
  std::size_t k_ = 0;
  std::map<std::string, Partition> partitions_;
  bool reset_pending_ = false;
};

std::string serialize_partition(const std::string& space_id, std::size_t k, const std::vector<EmbeddingEntry>& entries);
std::vector<EmbeddingEntry> parse_partition(std::string_view bytes, const std::string& space_id, std::size_t k);

}  // namespace gr
