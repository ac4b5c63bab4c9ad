#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gr/forest/bundle.hpp"
#include "gr/pipeline/config.hpp"
#include "gr/simstore/store.hpp"

namespace gr {

// Progress of the embedding backfill. Day d (0-based) covers
// [anchor - (d+1) days, anchor - d days).
struct BackfillState {
  std::uint32_t days_covered = 0;
  std::optional<Timestamp> anchor;  // set by the first step: start of the day containing "now"
  std::string space_id;             // embedding space the progress belongs to

  std::string serialize() const;
  static BackfillState parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BackfillState load(const std::filesystem::path& path);  // cold state when missing
  bool operator==(const BackfillState&) const = default;
};

struct BackfillStepResult {
  BackfillState state;
  bool noop = false;
  Timestamp day_start{};
  Timestamp day_end{};
  std::size_t incidents = 0;
  UpsertResult upsert;
};

// Embeds incidents whose latest alert (before the anchor) falls on the next
// uncovered day, graded or not, with per-key cap s. At the horizon the step
// is a no-op. A state from another embedding space restarts from day 0.
BackfillStepResult run_backfill_step(BackfillState state, const std::vector<AlertRecord>& alerts,
                                     const ModelBundle& triage, EmbeddingStore& store, const PipelineConfig& config,
                                     Timestamp now);

std::uint32_t horizon_days(const PipelineConfig& config);

}  // namespace gr
