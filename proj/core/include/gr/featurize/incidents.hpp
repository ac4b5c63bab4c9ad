#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gr/featurize/encoder.hpp"

namespace gr {

struct IncidentRecord {
  std::string org_id;
  std::string incident_id;
  std::vector<std::string> alert_ids;
  std::vector<double> numeric;                                // elementwise member sum
  std::vector<std::pair<std::uint32_t, double>> one_hot_counts;  // index -> member count, increasing
  std::optional<Grade> grade;
  std::string incident_hash;
  std::vector<std::string> detector_set;  // sorted, unique
  Timestamp latest = kEpoch;

  std::string key() const { return incident_key(org_id, incident_id); }
  SparseVector feature_vector(std::size_t one_hot_dimension) const;
};

// Most frequent grade; ties resolve TP > FP > BP. nullopt when all counts are 0.
std::optional<Grade> majority_grade(const std::array<std::size_t, kGradeCount>& counts);
std::optional<Grade> majority_grade(std::span<const std::optional<Grade>> grades);

// SHA-1 (lowercase hex) of the deduplicated, sorted detector ids joined by '|'.
std::string incident_hash(std::span<const std::string> detector_ids);

// One record per (org, incident) in order of first appearance. With
// require_grade set, incidents whose members carry no grade are dropped.
std::vector<IncidentRecord> form_incidents(std::span<const EncodedAlert> alerts, bool require_grade);

// Caps every (incident_hash, grade) key at `cap` members, chosen uniformly
// under `seed`. Survivors keep their input order. Throws ConfigError if cap == 0.
std::vector<IncidentRecord> sample_incidents(std::vector<IncidentRecord> incidents, std::size_t cap,
                                             std::uint64_t seed);

}  // namespace gr
