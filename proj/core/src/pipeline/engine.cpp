#include "gr/pipeline/engine.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

using nlohmann::json;

namespace gr {

Engine::Engine(DataLayout layout, PipelineConfig config, std::shared_ptr<const Clock> clock)
    : layout_(std::move(layout)),
      config_(std::move(config)),
      clock_(std::move(clock)),
      rules_(config_.entity_rules.empty() ? EntityRules::defaults() : EntityRules::load(config_.entity_rules)),
      registry_(layout_.registry()),
      store_(EmbeddingStore::load(layout_.embeddings())),
      journal_(layout_.journal()) {
  config_.validate();
  std::filesystem::create_directories(layout_.root);
}

std::shared_ptr<const TelemetrySet> Engine::telemetry(bool reload) {
  std::lock_guard lock(telemetry_mutex_);
  if (!telemetry_ || reload) telemetry_ = std::make_shared<const TelemetrySet>(load_telemetry(layout_.telemetry()));
  return telemetry_;
}

LabelOverlay Engine::labels() const {
  std::lock_guard lock(labels_mutex_);
  return LabelOverlay::load(layout_.labels());
}

void Engine::update_labels(const std::function<void(LabelOverlay&)>& edit) {
  std::lock_guard lock(labels_mutex_);
  auto overlay = LabelOverlay::load(layout_.labels());
  edit(overlay);
  overlay.save(layout_.labels());
}

FeedbackLabelResult Engine::apply_feedback() {
  const auto data = telemetry(true);
  FeedbackLabelResult result;
  update_labels([&](LabelOverlay& overlay) {
    result = apply_feedback_as_labels(journal_.feedback(), journal_, data->alerts, overlay);
  });
  return result;
}

std::vector<AlertRecord> Engine::labeled_alerts() {
  auto alerts = telemetry(true)->alerts;
  labels().apply(alerts);
  return alerts;
}

BackfillState Engine::backfill_state() const {
  std::lock_guard lock(state_mutex_);
  return BackfillState::load(layout_.backfill_state());
}

ModelBundle Engine::require_champion(std::string_view task) {
  auto bundle = registry_.champion(std::string(task));
  if (!bundle) throw NotFoundError(fmt::format("no champion {} model; run a train cycle first", task));
  return std::move(*bundle);
}

CycleReport Engine::train(std::optional<Timestamp> now) {
  std::lock_guard lock(train_mutex_);
  const auto t = now.value_or(clock_->now());
  const auto feedback = apply_feedback();
  if (feedback.labels_written || feedback.dangling) {
    spdlog::info("feedback: {} labels written, {} dangling references", feedback.labels_written, feedback.dangling);
  }
  const auto alerts = labeled_alerts();
  auto report = run_train_cycle(alerts, config_, registry_, store_, t);
  store_.save(layout_.embeddings());
  if (report.store_reset) {
    std::lock_guard state_lock(state_mutex_);
    BackfillState{0, std::nullopt, store_.space_id()}.save(layout_.backfill_state());
  }

  std::filesystem::create_directories(layout_.reports());
  auto j = report.to_json();
  j["now"] = format_rfc3339(t);
  j["telemetry"] = {{"rows_read", telemetry()->stats.rows_read},
                    {"malformed_rows", telemetry()->stats.malformed_rows},
                    {"timestamp_errors", telemetry()->stats.timestamp_errors},
                    {"unknown_entity_types", telemetry()->stats.unknown_entity_types}};
  j["feedback_labels_written"] = feedback.labels_written;
  j["feedback_dangling"] = feedback.dangling;
  const auto text = j.dump(2);
  write_file_atomic(layout_.reports() / "latest.json", text);
  write_file_atomic(layout_.reports() / fmt::format("cycle-{}.json", to_unix(t)), text);
  if (!report.triage.skipped) save_split(report.triage.split, layout_.reports() / "split-triage.txt");
  if (!report.remediation.skipped) save_split(report.remediation.split, layout_.reports() / "split-remediation.txt");
  return report;
}

InferenceResult Engine::infer(std::optional<Timestamp> window_end) {
  std::lock_guard lock(infer_mutex_);
  const auto triage = require_champion(kTriageTask);
  const auto remediation = require_champion(kRemediationTask);
  const auto data = telemetry(true);
  auto result = run_inference_batch(data->alerts, window_end.value_or(clock_->now()), triage, remediation, store_,
                                    journal_, rules_, config_);
  store_.save(layout_.embeddings());
  return result;
}

std::vector<BackfillStepResult> Engine::backfill(std::size_t steps, std::optional<Timestamp> now) {
  std::lock_guard lock(backfill_mutex_);
  const auto t = now.value_or(clock_->now());
  const auto triage = require_champion(kTriageTask);
  const auto data = telemetry(true);
  std::vector<BackfillStepResult> out;
  for (std::size_t i = 0; i < steps; ++i) {
    std::lock_guard state_lock(state_mutex_);
    auto result = run_backfill_step(BackfillState::load(layout_.backfill_state()), data->alerts, triage, store_,
                                    config_, t);
    result.state.save(layout_.backfill_state());
    const bool noop = result.noop;
    out.push_back(std::move(result));
    if (noop) break;
  }
  store_.save(layout_.embeddings());
  return out;
}

json Engine::latest_report() const {
  const auto path = layout_.reports() / "latest.json";
  if (!std::filesystem::exists(path)) return nullptr;
  return json::parse(read_file(path));
}

}  // namespace gr
