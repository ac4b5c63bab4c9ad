#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gr/forest/calibration.hpp"
#include "gr/forest/grid_search.hpp"
#include "gr/forest/registry.hpp"
#include "gr/metrics/eval_report.hpp"
#include "gr/pipeline/config.hpp"
#include "gr/simstore/store.hpp"
#include "gr/telemetry/split.hpp"

namespace gr {

inline constexpr std::string_view kTriageTask = "triage";
inline constexpr std::string_view kRemediationTask = "remediation";

std::vector<std::string> triage_classes();       // TP, FP, BP
std::vector<std::string> remediation_classes();  // ContainAccount, IsolateDevice, StopVirtualMachine

struct TaskReport {
  std::string task;
  bool skipped = false;
  std::string skip_reason;
  std::size_t units = 0;  // incidents (triage) or actioned alerts (remediation)
  std::size_t train_rows = 0, val_rows = 0, test_rows = 0;
  std::size_t pca_components = 0;
  double pca_captured = 0.0;
  std::size_t input_dim = 0;  // encoder dimension before PCA
  ForestParams best_params;
  std::vector<GridPointResult> grid;
  EvalReport val_report;
  EvalReport test_report;
  double majority_baseline_f1 = 0.0;  // test macro-F1 of always predicting the train majority class
  std::vector<std::optional<double>> thresholds;
  EmissionStats val_emission;
  EmissionStats test_emission;
  std::vector<ScoredPrediction> val_predictions;  // not serialized
  std::vector<ScoredPrediction> test_predictions;  // not serialized
  DatasetSplit split;
  std::optional<ValidationVerdict> verdict;
  std::string bundle_digest;
  double seconds = 0.0;
};

struct CycleReport {
  std::size_t alerts = 0;
  std::size_t graded_alerts = 0;
  std::size_t actioned_alerts = 0;
  std::size_t encoder_dimension = 0;
  std::size_t incidents_formed = 0;  // graded incidents
  std::size_t incidents_sampled = 0;
  TaskReport triage;
  TaskReport remediation;
  std::size_t embeddings_upserted = 0;
  std::size_t embeddings_evicted = 0;
  bool store_reset = false;
  std::map<std::string, double> stage_seconds;

  nlohmann::json to_json() const;
};

// One train cycle: encoder fit, bifurcation of actioned alerts, incident formation and
// sampling, separate incident/alert PCA, split, grid search, calibration on
// the validation split, test evaluation, champion/challenger storage, and
// incident embeddings into the live triage space. Both tasks are trained
// before either is stored, so a failure leaves the prior champions live.
// Throws DataError when `alerts` is empty.
CycleReport run_train_cycle(const std::vector<AlertRecord>& alerts, const PipelineConfig& config,
                            ModelRegistry& registry, EmbeddingStore& store, Timestamp now);

nlohmann::json task_report_json(const TaskReport& report);

}  // namespace gr
