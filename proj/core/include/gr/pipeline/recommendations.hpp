#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gr/pipeline/entity_rules.hpp"
#include "gr/simstore/store.hpp"

namespace gr {

enum class RecKind : std::uint8_t { Triage = 0, Similar = 1, Remediation = 2 };
std::string_view to_string(RecKind kind);
std::optional<RecKind> parse_rec_kind(std::string_view text);

struct TriageRec {
  std::string org_id;
  std::string incident_id;
  Grade grade = Grade::TP;  // argmax class
  double score = 0.0;
  std::vector<double> scores;  // TP, FP, BP
  std::uint32_t model_version = 0;
  bool emitted = false;
  std::uint32_t revision = 0;
  Timestamp batch_end{};
  bool operator==(const TriageRec&) const = default;
};

struct SimilarRec {
  std::string org_id;
  std::string incident_id;
  std::vector<SimilarMatch> matches;
  std::uint32_t revision = 0;
  Timestamp batch_end{};
  bool operator==(const SimilarRec&) const = default;
};

struct AlertActionRec {
  std::string alert_id;
  Action action = Action::ContainAccount;
  double score = 0.0;
  std::optional<EntityRef> entity;  // nullopt: action without target
  bool emitted = false;
  bool operator==(const AlertActionRec&) const = default;
};

struct ActionTarget {
  Action action = Action::ContainAccount;
  std::optional<EntityRef> entity;
  double score = 0.0;                  // max over contributing alerts
  std::vector<std::string> alert_ids;  // sorted
  bool without_target() const { return !entity.has_value(); }
  bool operator==(const ActionTarget&) const = default;
};

struct RemediationRec {
  std::string org_id;
  std::string incident_id;
  std::vector<AlertActionRec> alert_recs;  // emitted per-alert actions, by alert id
  std::vector<ActionTarget> actions;       // unique (action, entity) pairs
  std::uint32_t model_version = 0;
  bool emitted = false;
  std::uint32_t revision = 0;
  Timestamp batch_end{};
  bool operator==(const RemediationRec&) const = default;
};

using Recommendation = std::variant<TriageRec, SimilarRec, RemediationRec>;

RecKind kind_of(const Recommendation& rec);
std::string incident_key_of(const Recommendation& rec);
std::uint32_t revision_of(const Recommendation& rec);
void set_revision(Recommendation& rec, std::uint32_t revision);

// True when the analyst-facing content differs: emitted grade for triage,
// (id, kind) list for similar incidents, action targets for remediation.
bool recommendation_changed(const Recommendation& before, const Recommendation& after);

// Deduplicates (action, entity) pairs across the incident's emitted alert
// recommendations and keeps the max score per pair. Throws DataError when no
// alert recommendation is emitted.
RemediationRec aggregate_remediation(std::string org_id, std::string incident_id,
                                     std::vector<AlertActionRec> alert_recs, std::uint32_t model_version);

nlohmann::json to_json(const Recommendation& rec);
Recommendation recommendation_from_json(const nlohmann::json& j);
nlohmann::json entity_to_json(const std::optional<EntityRef>& entity);
std::optional<EntityRef> entity_from_json(const nlohmann::json& j);

}  // namespace gr
