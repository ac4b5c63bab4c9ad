#include "gr/pipeline/recommendations.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "gr/common/error.hpp"

using nlohmann::json;

namespace gr {
namespace {

template <typename T, typename Parse>
T parse_enum(const json& j, Parse parse, std::string_view field) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw DataError(fmt::format("field '{}' has invalid value {}", field, j.dump()));
  return *v;
}

json scores_json(const std::vector<double>& scores) { return json(scores); }

}  // namespace

std::string_view to_string(RecKind kind) {
  switch (kind) {
    case RecKind::Triage:
      return "triage";
    case RecKind::Similar:
      return "similar";
    case RecKind::Remediation:
      return "remediation";
  }
  return "triage";
}

std::optional<RecKind> parse_rec_kind(std::string_view text) {
  for (auto k : {RecKind::Triage, RecKind::Similar, RecKind::Remediation}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

RecKind kind_of(const Recommendation& rec) { return static_cast<RecKind>(rec.index()); }

std::string incident_key_of(const Recommendation& rec) {
  return std::visit([](const auto& r) { return incident_key(r.org_id, r.incident_id); }, rec);
}

std::uint32_t revision_of(const Recommendation& rec) {
  return std::visit([](const auto& r) { return r.revision; }, rec);
}

void set_revision(Recommendation& rec, std::uint32_t revision) {
  std::visit([&](auto& r) { r.revision = revision; }, rec);
}

bool recommendation_changed(const Recommendation& before, const Recommendation& after) {
  if (before.index() != after.index()) return true;
  if (const auto* a = std::get_if<TriageRec>(&before)) {
    const auto& b = std::get<TriageRec>(after);
    if (a->emitted != b.emitted) return true;
    return a->emitted && a->grade != b.grade;
  }
  if (const auto* a = std::get_if<SimilarRec>(&before)) {
    const auto& b = std::get<SimilarRec>(after);
    if (a->matches.size() != b.matches.size()) return true;
    for (std::size_t i = 0; i < a->matches.size(); ++i) {
      if (a->matches[i].incident_id != b.matches[i].incident_id || a->matches[i].kind != b.matches[i].kind) return true;
    }
    return false;
  }
  const auto& a = std::get<RemediationRec>(before);
  const auto& b = std::get<RemediationRec>(after);
  if (a.emitted != b.emitted || a.actions.size() != b.actions.size()) return true;
  for (std::size_t i = 0; i < a.actions.size(); ++i) {
    if (a.actions[i].action != b.actions[i].action || a.actions[i].entity != b.actions[i].entity) return true;
  }
  return false;
}

RemediationRec aggregate_remediation(std::string org_id, std::string incident_id,
                                     std::vector<AlertActionRec> alert_recs, std::uint32_t model_version) {
  std::erase_if(alert_recs, [](const AlertActionRec& r) { return !r.emitted; });
  if (alert_recs.empty()) throw DataError("aggregate_remediation needs at least one emitted alert recommendation");
  std::sort(alert_recs.begin(), alert_recs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.alert_id, a.action) < std::tie(b.alert_id, b.action);
  });

  // Key (action, has_target, target); targetless pairs sort first per action.
  using PairKey = std::tuple<Action, bool, EntityRef>;
  std::map<PairKey, ActionTarget> pairs;
  for (const auto& r : alert_recs) {
    auto [it, inserted] = pairs.try_emplace(PairKey{r.action, r.entity.has_value(), r.entity.value_or(EntityRef{})});
    auto& target = it->second;
    if (inserted) {
      target.action = r.action;
      target.entity = r.entity;
      target.score = r.score;
    } else {
      target.score = std::max(target.score, r.score);
    }
    target.alert_ids.push_back(r.alert_id);
  }

  RemediationRec rec;
  rec.org_id = std::move(org_id);
  rec.incident_id = std::move(incident_id);
  rec.model_version = model_version;
  rec.emitted = true;
  for (auto& [key, target] : pairs) {
    std::sort(target.alert_ids.begin(), target.alert_ids.end());
    target.alert_ids.erase(std::unique(target.alert_ids.begin(), target.alert_ids.end()), target.alert_ids.end());
    rec.actions.push_back(std::move(target));
  }
  rec.alert_recs = std::move(alert_recs);
  return rec;
}

json entity_to_json(const std::optional<EntityRef>& entity) {
  if (!entity) return nullptr;
  return json{{"type", to_string(entity->type)}, {"id", entity->id}, {"role", entity->role}};
}

std::optional<EntityRef> entity_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  EntityRef e;
  e.type = parse_entity_type(j.at("type").get<std::string>());
  e.id = j.at("id").get<std::string>();
  e.role = j.at("role").get<std::string>();
  return e;
}

json to_json(const Recommendation& rec) {
  json j;
  j["kind"] = to_string(kind_of(rec));
  std::visit(
      [&](const auto& r) {
        j["org_id"] = r.org_id;
        j["incident_id"] = r.incident_id;
        j["incident_key"] = incident_key(r.org_id, r.incident_id);
        j["revision"] = r.revision;
        j["batch_end"] = format_rfc3339(r.batch_end);
      },
      rec);
  if (const auto* t = std::get_if<TriageRec>(&rec)) {
    j["grade"] = to_string(t->grade);
    j["score"] = t->score;
    j["scores"] = scores_json(t->scores);
    j["model_version"] = t->model_version;
    j["emitted"] = t->emitted;
  } else if (const auto* s = std::get_if<SimilarRec>(&rec)) {
    j["matches"] = json::array();
    for (const auto& m : s->matches) {
      j["matches"].push_back({{"incident_id", m.incident_id},
                              {"kind", to_string(m.kind)},
                              {"score", m.score},
                              {"timestamp", format_rfc3339(m.timestamp)}});
    }
  } else {
    const auto& r = std::get<RemediationRec>(rec);
    j["model_version"] = r.model_version;
    j["emitted"] = r.emitted;
    j["alert_recs"] = json::array();
    for (const auto& a : r.alert_recs) {
      j["alert_recs"].push_back({{"alert_id", a.alert_id},
                                 {"action", to_string(a.action)},
                                 {"score", a.score},
                                 {"entity", entity_to_json(a.entity)},
                                 {"without_target", !a.entity.has_value()},
                                 {"emitted", a.emitted}});
    }
    j["actions"] = json::array();
    for (const auto& t : r.actions) {
      j["actions"].push_back({{"action", to_string(t.action)},
                              {"entity", entity_to_json(t.entity)},
                              {"without_target", t.without_target()},
                              {"score", t.score},
                              {"alert_ids", t.alert_ids}});
    }
  }
  return j;
}

Recommendation recommendation_from_json(const json& j) {
  const auto kind = parse_enum<RecKind>(j.at("kind"), parse_rec_kind, "kind");
  auto timestamp = [](const json& v) {
    const auto t = parse_rfc3339(v.get<std::string>());
    if (!t) throw DataError(fmt::format("bad timestamp {}", v.dump()));
    return *t;
  };
  auto fill = [&](auto& r) {
    r.org_id = j.at("org_id").get<std::string>();
    r.incident_id = j.at("incident_id").get<std::string>();
    r.revision = j.at("revision").get<std::uint32_t>();
    r.batch_end = timestamp(j.at("batch_end"));
  };
  switch (kind) {
    case RecKind::Triage: {
      TriageRec r;
      fill(r);
      r.grade = parse_enum<Grade>(j.at("grade"), parse_grade, "grade");
      r.score = j.at("score").get<double>();
      r.scores = j.at("scores").get<std::vector<double>>();
      r.model_version = j.at("model_version").get<std::uint32_t>();
      r.emitted = j.at("emitted").get<bool>();
      return r;
    }
    case RecKind::Similar: {
      SimilarRec r;
      fill(r);
      for (const auto& m : j.at("matches")) {
        r.matches.push_back({m.at("incident_id").get<std::string>(),
                             parse_enum<MatchKind>(m.at("kind"), parse_match_kind, "kind"), m.at("score").get<double>(),
                             timestamp(m.at("timestamp"))});
      }
      return r;
    }
    case RecKind::Remediation: {
      RemediationRec r;
      fill(r);
      r.model_version = j.at("model_version").get<std::uint32_t>();
      r.emitted = j.at("emitted").get<bool>();
      for (const auto& a : j.at("alert_recs")) {
        r.alert_recs.push_back({a.at("alert_id").get<std::string>(),
                                parse_enum<Action>(a.at("action"), parse_action, "action"), a.at("score").get<double>(),
                                entity_from_json(a.at("entity")), a.at("emitted").get<bool>()});
      }
      for (const auto& t : j.at("actions")) {
        r.actions.push_back({parse_enum<Action>(t.at("action"), parse_action, "action"), entity_from_json(t.at("entity")),
                             t.at("score").get<double>(), t.at("alert_ids").get<std::vector<std::string>>()});
      }
      return r;
    }
  }
  throw DataError("unreachable recommendation kind");
}

}  // namespace gr
