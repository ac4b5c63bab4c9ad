#include "gr/pipeline/backfill.hpp"

#include <unordered_map>

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"
#include "gr/featurize/incidents.hpp"
#include "gr/pipeline/data.hpp"

namespace gr {

std::string BackfillState::serialize() const {
  return fmt::format("gr-backfill 1\ndays_covered {}\nanchor {}\nspace {}\n", days_covered,
                     anchor ? std::to_string(to_unix(*anchor)) : std::string("none"),
                     space_id.empty() ? std::string("none") : space_id);
}

BackfillState BackfillState::parse(std::string_view text) {
  BackfillState s;
  const auto lines = split(trim(text), '\n');
  if (lines.empty() || trim(lines[0]) != "gr-backfill 1") throw SchemaError("backfill state: bad magic line");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos) throw SchemaError(fmt::format("backfill state: bad line '{}'", line));
    const auto key = line.substr(0, sp);
    const auto value = trim(line.substr(sp + 1));
    if (key == "days_covered") {
      s.days_covered = static_cast<std::uint32_t>(parse_int(value));
    } else if (key == "anchor") {
      if (value != "none") s.anchor = from_unix(parse_int(value));
    } else if (key == "space") {
      if (value != "none") s.space_id = std::string(value);
    } else {
      throw SchemaError(fmt::format("backfill state: unknown key '{}'", key));
    }
  }
  return s;
}

void BackfillState::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

BackfillState BackfillState::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse(read_file(path));
}

std::uint32_t horizon_days(const PipelineConfig& config) {
  return static_cast<std::uint32_t>(config.horizon.count() / 86400);
}

BackfillStepResult run_backfill_step(BackfillState state, const std::vector<AlertRecord>& alerts,
                                     const ModelBundle& triage, EmbeddingStore& store, const PipelineConfig& config,
                                     Timestamp now) {
  BackfillStepResult result;
  ensure_space(store, triage);
  if (state.space_id != store.space_id()) state = BackfillState{0, std::nullopt, store.space_id()};
  if (state.days_covered >= horizon_days(config)) {
    result.state = std::move(state);
    result.noop = true;
    return result;
  }
  if (!state.anchor) state.anchor = std::chrono::floor<std::chrono::days>(now);
  const auto anchor = *state.anchor;
  result.day_end = anchor - days(state.days_covered);
  result.day_start = result.day_end - days(1);

  std::unordered_map<std::string, Timestamp> latest;
  for (const auto& a : alerts) {
    if (a.timestamp >= anchor) continue;
    auto [it, inserted] = latest.try_emplace(incident_key(a.org_id, a.incident_id), a.timestamp);
    if (!inserted && a.timestamp > it->second) it->second = a.timestamp;
  }
  std::vector<AlertRecord> day_alerts;
  for (const auto& a : alerts) {
    if (a.timestamp >= anchor) continue;
    const auto t = latest.at(incident_key(a.org_id, a.incident_id));
    if (t >= result.day_start && t < result.day_end) day_alerts.push_back(a);
  }
  if (!day_alerts.empty()) {
    const auto outcome = embed_incidents(day_alerts, triage, store, config.store_cap, config.horizon, now,
                                         /*require_grade=*/false);
    result.incidents = outcome.incidents;
    result.upsert = outcome.upsert;
  }
  ++state.days_covered;
  result.state = std::move(state);
  return result;
}

}  // namespace gr
