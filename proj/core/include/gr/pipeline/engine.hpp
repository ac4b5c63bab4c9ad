#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include <nlohmann/json.hpp>

#include "gr/forest/registry.hpp"
#include "gr/pipeline/backfill.hpp"
#include "gr/pipeline/clock.hpp"
#include "gr/pipeline/data.hpp"
#include "gr/pipeline/inference.hpp"
#include "gr/pipeline/train.hpp"
#include "gr/service/feedback.hpp"
#include "gr/service/journal.hpp"

namespace gr {

// The three pipelines over one data directory. Each pipeline kind runs at
// most one instance at a time; different kinds may overlap.
class Engine {
 public:
  Engine(DataLayout layout, PipelineConfig config, std::shared_ptr<const Clock> clock);

  const DataLayout& layout() const { return layout_; }
  const PipelineConfig& config() const { return config_; }
  Timestamp now() const { return clock_->now(); }

  // Applies pending feedback as labels, then runs a train cycle over all
  // telemetry with the label overlay applied. Writes reports/latest.json.
  CycleReport train(std::optional<Timestamp> now = std::nullopt);

  // Window ending at `window_end` (default: now). Throws NotFoundError when a
  // champion model is missing.
  InferenceResult infer(std::optional<Timestamp> window_end = std::nullopt);

  std::vector<BackfillStepResult> backfill(std::size_t steps, std::optional<Timestamp> now = std::nullopt);

  FeedbackLabelResult apply_feedback();
  // Mutates and persists the label overlay under its lock.
  void update_labels(const std::function<void(LabelOverlay&)>& edit);
  LabelOverlay labels() const;

  // Cached telemetry; reloaded by every pipeline run or on demand.
  std::shared_ptr<const TelemetrySet> telemetry(bool reload = false);

  JournalStore& journal() { return journal_; }
  EmbeddingStore& store() { return store_; }
  ModelRegistry& registry() { return registry_; }
  BackfillState backfill_state() const;
  EntityRules entity_rules() const { return rules_; }

  // Most recent cycle report, null before the first cycle.
  nlohmann::json latest_report() const;

 private:
  std::vector<AlertRecord> labeled_alerts();
  ModelBundle require_champion(std::string_view task);

  DataLayout layout_;
  PipelineConfig config_;
  std::shared_ptr<const Clock> clock_;
  EntityRules rules_;
  ModelRegistry registry_;
  EmbeddingStore store_;
  JournalStore journal_;

  std::mutex train_mutex_, infer_mutex_, backfill_mutex_;
  mutable std::mutex labels_mutex_, telemetry_mutex_, state_mutex_;
  std::shared_ptr<const TelemetrySet> telemetry_;
};

}  // namespace gr
