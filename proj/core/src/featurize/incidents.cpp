#include "gr/featurize/incidents.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"

namespace gr {

SparseVector IncidentRecord::feature_vector(std::size_t one_hot_dimension) const {
  SparseVector v;
  v.indices.reserve(one_hot_counts.size() + numeric.size());
  v.values.reserve(one_hot_counts.size() + numeric.size());
  for (const auto& [idx, count] : one_hot_counts) {
    v.indices.push_back(idx);
    v.values.push_back(count);
  }
  for (std::size_t j = 0; j < numeric.size(); ++j) {
    if (numeric[j] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(one_hot_dimension + j));
      v.values.push_back(numeric[j]);
    }
  }
  return v;
}

std::optional<Grade> majority_grade(const std::array<std::size_t, kGradeCount>& counts) {
  std::optional<Grade> best;
  std::size_t best_count = 0;
  // kAllGrades is already in tie-break priority order.
  for (auto g : kAllGrades) {
    const auto n = counts[static_cast<std::size_t>(g)];
    if (n > best_count) {
      best = g;
      best_count = n;
    }
  }
  return best;
}

std::optional<Grade> majority_grade(std::span<const std::optional<Grade>> grades) {
  std::array<std::size_t, kGradeCount> counts{};
  for (const auto& g : grades) {
    if (g) ++counts[static_cast<std::size_t>(*g)];
  }
  return majority_grade(counts);
}

std::string incident_hash(std::span<const std::string> detector_ids) {
  std::vector<std::string> ids(detector_ids.begin(), detector_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::string joined;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) joined.push_back('|');
    joined += ids[i];
  }
  return sha1_hex(joined);
}

std::vector<IncidentRecord> form_incidents(std::span<const EncodedAlert> alerts, bool require_grade) {
  struct Builder {
    IncidentRecord record;
    std::map<std::uint32_t, double> one_hot;
    std::array<std::size_t, kGradeCount> grade_counts{};
  };
  std::vector<Builder> builders;
  std::unordered_map<std::string, std::size_t> slot;

  for (const auto& alert : alerts) {
    auto [it, inserted] = slot.try_emplace(incident_key(alert.org_id, alert.incident_id), builders.size());
    if (inserted) {
      Builder b;
      b.record.org_id = alert.org_id;
      b.record.incident_id = alert.incident_id;
      b.record.numeric.assign(alert.numeric.size(), 0.0);
      b.record.latest = alert.timestamp;
      builders.push_back(std::move(b));
    }
    Builder& b = builders[it->second];
    b.record.alert_ids.push_back(alert.alert_id);
    if (b.record.numeric.size() != alert.numeric.size()) {
      throw DimensionError("alerts of one incident have different numeric dimensions");
    }
    for (std::size_t j = 0; j < alert.numeric.size(); ++j) b.record.numeric[j] += alert.numeric[j];
    for (auto idx : alert.one_hot) b.one_hot[idx] += 1.0;
    if (alert.grade) ++b.grade_counts[static_cast<std::size_t>(*alert.grade)];
    b.record.detector_set.push_back(alert.detector_id);
    b.record.latest = std::max(b.record.latest, alert.timestamp);
  }

  std::vector<IncidentRecord> out;
  out.reserve(builders.size());
  for (auto& b : builders) {
    b.record.grade = majority_grade(b.grade_counts);
    if (require_grade && !b.record.grade) continue;
    auto& detectors = b.record.detector_set;
    std::sort(detectors.begin(), detectors.end());
    detectors.erase(std::unique(detectors.begin(), detectors.end()), detectors.end());
    b.record.incident_hash = incident_hash(detectors);
    b.record.one_hot_counts.assign(b.one_hot.begin(), b.one_hot.end());
    out.push_back(std::move(b.record));
  }
  return out;
}

std::vector<IncidentRecord> sample_incidents(std::vector<IncidentRecord> incidents, std::size_t cap,
                                             std::uint64_t seed) {
  if (cap == 0) throw ConfigError("sampling cap must be >= 1");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < incidents.size(); ++i) {
    const auto& inc = incidents[i];
    const std::string grade = inc.grade ? std::string(to_string(*inc.grade)) : "ungraded";
    groups[inc.incident_hash + "|" + grade].push_back(i);
  }
  std::vector<bool> keep(incidents.size(), true);
  for (auto& [key, members] : groups) {
    if (members.size() <= cap) continue;
    // Order by identity, not position, so the sample is input-order independent.
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(incidents[a].org_id, incidents[a].incident_id) <
             std::tie(incidents[b].org_id, incidents[b].incident_id);
    });
    Rng rng(splitmix64(seed ^ fnv1a64(key)));
    shuffle_in_place(std::span<std::size_t>(members), rng);
    for (std::size_t i = cap; i < members.size(); ++i) keep[members[i]] = false;
  }
  std::vector<IncidentRecord> out;
  out.reserve(incidents.size());
  for (std::size_t i = 0; i < incidents.size(); ++i) {
    if (keep[i]) out.push_back(std::move(incidents[i]));
  }
  return out;
}

}  // namespace gr
