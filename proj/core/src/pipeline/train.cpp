#include "gr/pipeline/train.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/featurize/incidents.hpp"
#include "gr/pipeline/data.hpp"
#include "gr/reduce/pca.hpp"

using nlohmann::json;

namespace gr {
namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_[stage] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  std::map<std::string, double>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct PreparedTask {
  TaskReport report;
  LabeledData train, val, test;
  PcaModel pca;
};

struct TrainedTask {
  TaskReport report;
  std::optional<ModelBundle> bundle;
};

double majority_baseline(const LabeledData& train, const LabeledData& test, const std::vector<std::string>& classes) {
  const auto counts = train.class_counts();
  const auto majority = static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<std::uint32_t> preds(test.rows(), majority);
  return macro_scores(preds, test.labels, classes).macro_f1;
}

TrainedTask fit_task(PreparedTask prep, const std::vector<std::string>& classes, const PipelineConfig& config,
                     double target_precision, const EncoderModel& encoder, std::string_view task) {
  TrainedTask out;
  auto& r = prep.report;
  const auto start = std::chrono::steady_clock::now();

  auto search = grid_search(prep.train, prep.val, classes, config.grid, config.seed, config.workers);
  auto& model = search.best;
  r.grid = std::move(search.points);
  r.best_params = model.params;

  calibrate_thresholds(model, prep.val, target_precision);
  r.thresholds = model.thresholds;
  r.val_predictions = score_dataset(model, prep.val);
  r.test_predictions = score_dataset(model, prep.test);
  r.val_emission = emission_stats(r.val_predictions, model.thresholds);
  r.test_emission = emission_stats(r.test_predictions, model.thresholds);

  auto argmaxes = [](const std::vector<ScoredPrediction>& p) {
    std::vector<std::uint32_t> out;
    out.reserve(p.size());
    for (const auto& s : p) out.push_back(s.predicted);
    return out;
  };
  r.val_report = macro_scores(argmaxes(r.val_predictions), prep.val.labels, classes);
  r.val_report.coverage = r.val_emission.coverage();
  r.test_report = macro_scores(argmaxes(r.test_predictions), prep.test.labels, classes);
  r.test_report.coverage = r.test_emission.coverage();
  r.majority_baseline_f1 = majority_baseline(prep.train, prep.test, classes);

  model.metrics.val_macro_precision = r.val_report.macro_precision;
  model.metrics.val_macro_recall = r.val_report.macro_recall;
  model.metrics.val_macro_f1 = r.val_report.macro_f1;
  model.metrics.test_macro_precision = r.test_report.macro_precision;
  model.metrics.test_macro_recall = r.test_report.macro_recall;
  model.metrics.test_macro_f1 = r.test_report.macro_f1;
  model.metrics.test_coverage = r.test_emission.coverage();
  model.metrics.test_emitted_precision = r.test_emission.precision();

  ModelBundle bundle;
  bundle.task = std::string(task);
  bundle.model = std::move(model);
  bundle.encoder = encoder;
  bundle.pca = std::move(prep.pca);
  bundle.tolerance = config.tolerance;
  bundle.sampling_seed = config.seed;
  out.bundle = std::move(bundle);

  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("{}: test macro-F1 {:.4f} (baseline {:.4f}), coverage {:.3f}, emitted precision {:.3f}", task,
               r.test_report.macro_f1, r.majority_baseline_f1, r.test_emission.coverage(), r.test_emission.precision());
  out.report = std::move(r);
  return out;
}

LabeledData rows_for(const std::vector<std::string>& ids, const std::unordered_map<std::string, std::size_t>& slot,
                     const std::vector<std::vector<double>>& features, const std::vector<std::uint32_t>& labels,
                     const std::vector<std::string>& keys, std::size_t dim, std::size_t classes) {
  LabeledData data(dim, classes);
  for (const auto& id : ids) {
    const auto i = slot.at(id);
    data.add(features[i], labels[i], row_key(keys[i]));
  }
  return data;
}

PcaOptions pca_options(const PipelineConfig& config) {
  PcaOptions o;
  o.max_components = config.max_components;
  o.variance_target = config.variance_target;
  o.seed = config.seed;
  return o;
}

}  // namespace

std::vector<std::string> triage_classes() {
  std::vector<std::string> out;
  for (auto g : kAllGrades) out.emplace_back(to_string(g));
  return out;
}

std::vector<std::string> remediation_classes() {
  std::vector<std::string> out;
  for (auto a : kAllActions) out.emplace_back(to_string(a));
  return out;
}

CycleReport run_train_cycle(const std::vector<AlertRecord>& alerts, const PipelineConfig& config,
                            ModelRegistry& registry, EmbeddingStore& store, Timestamp now) {
  config.validate();
  if (alerts.empty()) throw DataError("train cycle needs non-empty telemetry");
  CycleReport report;
  StageTimer timer(report.stage_seconds);
  report.alerts = alerts.size();
  for (const auto& a : alerts) {
    report.graded_alerts += a.grade.has_value();
    report.actioned_alerts += a.action.has_value();
  }

  // Features, compression, one-hot; split off the actioned alerts.
  const auto encoder = fit_encoder(alerts, config.min_cardinality, feature_manifest_v1());
  report.encoder_dimension = encoder.dimension();
  const auto encoded = encode_all(encoder, alerts);
  std::vector<std::size_t> actioned;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i].action) actioned.push_back(i);
  }
  timer.lap("encode");

  // Graded incidents, capped per (hash, grade).
  auto incidents = form_incidents(encoded, true);
  report.incidents_formed = incidents.size();
  incidents = sample_incidents(std::move(incidents), config.sample_cap, config.seed);
  report.incidents_sampled = incidents.size();
  timer.lap("incidents");

  const auto classes_t = triage_classes();
  const auto classes_r = remediation_classes();
  TrainedTask triage, remediation;
  triage.report.task = kTriageTask;
  remediation.report.task = kRemediationTask;

  // Triage: incident PCA, split stratified by grade, grid search.
  if (incidents.empty()) {
    triage.report.skipped = true;
    triage.report.skip_reason = "no graded incidents";
  } else {
    PreparedTask prep;
    prep.report.task = kTriageTask;
    prep.report.units = incidents.size();
    prep.report.input_dim = encoder.dimension();
    FeatureMatrix matrix(encoder.dimension());
    for (const auto& inc : incidents) matrix.add_row(inc.feature_vector(encoder.one_hot_dimension()));
    prep.pca = fit_pca(matrix, pca_options(config));
    prep.report.pca_components = prep.pca.components();
    prep.report.pca_captured = prep.pca.captured_ratio();
    timer.lap("triage_pca");

    std::vector<std::vector<double>> features;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> keys;
    std::vector<SplitUnit> units;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < incidents.size(); ++i) {
      const auto& inc = incidents[i];
      features.push_back(prep.pca.transform(inc.feature_vector(encoder.one_hot_dimension())));
      labels.push_back(static_cast<std::uint32_t>(*inc.grade));
      keys.push_back(inc.key());
      slot.emplace(inc.key(), i);
      units.push_back({inc.key(), std::string(to_string(*inc.grade))});
    }
    prep.report.split = stratified_split(units, config.split, "grade", config.seed);
    const auto k = prep.pca.components();
    prep.train = rows_for(prep.report.split.train_ids, slot, features, labels, keys, k, classes_t.size());
    prep.val = rows_for(prep.report.split.val_ids, slot, features, labels, keys, k, classes_t.size());
    prep.test = rows_for(prep.report.split.test_ids, slot, features, labels, keys, k, classes_t.size());
    prep.report.train_rows = prep.train.rows();
    prep.report.val_rows = prep.val.rows();
    prep.report.test_rows = prep.test.rows();
    timer.lap("triage_split");
    triage = fit_task(std::move(prep), classes_t, config, config.triage_precision, encoder, kTriageTask);
    timer.lap("triage_train");
  }

  // Remediation: alert PCA over the actioned stream, split stratified by
  // action with every incident kept in one part.
  if (actioned.empty()) {
    remediation.report.skipped = true;
    remediation.report.skip_reason = "no actioned alerts";
  } else {
    PreparedTask prep;
    prep.report.task = kRemediationTask;
    prep.report.units = actioned.size();
    prep.report.input_dim = encoder.dimension();
    FeatureMatrix matrix(encoder.dimension());
    for (auto i : actioned) matrix.add_row(encoder.feature_vector(encoded[i]));
    prep.pca = fit_pca(matrix, pca_options(config));
    prep.report.pca_components = prep.pca.components();
    prep.report.pca_captured = prep.pca.captured_ratio();
    timer.lap("remediation_pca");

    std::vector<std::vector<double>> features;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> keys;
    std::map<std::string, std::array<std::size_t, kActionCount>> per_incident;
    std::vector<std::string> incident_order;
    for (auto i : actioned) {
      const auto& e = encoded[i];
      features.push_back(prep.pca.transform(encoder.feature_vector(e)));
      labels.push_back(static_cast<std::uint32_t>(*e.action));
      keys.push_back(e.alert_id);
      auto [it, inserted] = per_incident.try_emplace(incident_key(e.org_id, e.incident_id));
      if (inserted) {
        it->second.fill(0);
        incident_order.push_back(it->first);
      }
      ++it->second[static_cast<std::size_t>(*e.action)];
    }
    std::vector<SplitUnit> units;
    for (const auto& key : incident_order) {
      const auto& counts = per_incident.at(key);
      const auto major = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      units.push_back({key, std::string(to_string(kAllActions[major]))});
    }
    prep.report.split = stratified_split(units, config.split, "action", config.seed);

    const auto k = prep.pca.components();
    prep.train = LabeledData(k, classes_r.size());
    prep.val = LabeledData(k, classes_r.size());
    prep.test = LabeledData(k, classes_r.size());
    for (std::size_t j = 0; j < actioned.size(); ++j) {
      const auto& e = encoded[actioned[j]];
      const auto part = prep.report.split.part_of(incident_key(e.org_id, e.incident_id));
      auto& target = *part == SplitPart::Train ? prep.train : *part == SplitPart::Val ? prep.val : prep.test;
      target.add(features[j], labels[j], row_key(keys[j]));
    }
    prep.report.train_rows = prep.train.rows();
    prep.report.val_rows = prep.val.rows();
    prep.report.test_rows = prep.test.rows();
    timer.lap("remediation_split");
    remediation = fit_task(std::move(prep), classes_r, config, config.remediation_precision, encoder,
                           kRemediationTask);
    timer.lap("remediation_train");
  }

  // Champion/challenger, only after both tasks trained.
  for (auto* task : {&triage, &remediation}) {
    if (!task->bundle) continue;
    task->report.verdict = registry.validate_and_store(*task->bundle, config.tolerance);
    const auto& v = *task->report.verdict;
    const auto dir = v.accepted ? registry.bundle_dir(task->report.task, v.version)
                                : registry.root() / task->report.task / "rejected" / version_dir_name(v.version);
    task->report.bundle_digest = bundle_digest(dir);
  }
  timer.lap("store");

  // Graded incident embeddings in the live triage space.
  if (auto champion = registry.champion(std::string(kTriageTask))) {
    const auto outcome =
        embed_incidents(alerts, *champion, store, config.store_cap, config.horizon, now, /*require_grade=*/true);
    report.embeddings_upserted = outcome.upsert.accepted;
    report.embeddings_evicted = outcome.upsert.evicted;
    report.store_reset = outcome.store_reset;
    store.prune(config.horizon, now);
  }
  timer.lap("embed");

  report.triage = std::move(triage.report);
  report.remediation = std::move(remediation.report);
  return report;
}

json task_report_json(const TaskReport& r) {
  json j;
  j["task"] = r.task;
  j["skipped"] = r.skipped;
  if (r.skipped) {
    j["skip_reason"] = r.skip_reason;
    return j;
  }
  j["units"] = r.units;
  j["train_rows"] = r.train_rows;
  j["val_rows"] = r.val_rows;
  j["test_rows"] = r.test_rows;
  j["input_dim"] = r.input_dim;
  j["pca_components"] = r.pca_components;
  j["pca_captured"] = r.pca_captured;
  j["best_params"] = r.best_params.describe();
  j["grid"] = json::array();
  for (const auto& p : r.grid) {
    j["grid"].push_back({{"params", p.params.describe()},
                         {"val_macro_f1", p.val_macro_f1 ? json(*p.val_macro_f1) : json(nullptr)},
                         {"error", p.error},
                         {"seconds", p.seconds}});
  }
  j["val"] = report_to_json(r.val_report);
  j["test"] = report_to_json(r.test_report);
  j["majority_baseline_f1"] = r.majority_baseline_f1;
  j["thresholds"] = json::array();
  for (const auto& t : r.thresholds) j["thresholds"].push_back(t ? json(*t) : json("never"));
  j["val_emitted_precision"] = r.val_emission.precision();
  j["val_coverage"] = r.val_emission.coverage();
  j["test_emitted_precision"] = r.test_emission.precision();
  j["test_coverage"] = r.test_emission.coverage();
  if (r.verdict) {
    j["verdict"] = {{"accepted", r.verdict->accepted},
                    {"new_f1", r.verdict->new_f1},
                    {"old_f1", r.verdict->old_f1 ? json(*r.verdict->old_f1) : json(nullptr)},
                    {"tolerance", r.verdict->tolerance},
                    {"version", r.verdict->version},
                    {"champion_version", r.verdict->champion_version}};
  }
  j["bundle_digest"] = r.bundle_digest;
  j["split_warnings"] = r.split.warnings;
  j["seconds"] = r.seconds;
  return j;
}

json CycleReport::to_json() const {
  json j;
  j["alerts"] = alerts;
  j["graded_alerts"] = graded_alerts;
  j["actioned_alerts"] = actioned_alerts;
  j["encoder_dimension"] = encoder_dimension;
  j["incidents_formed"] = incidents_formed;
  j["incidents_sampled"] = incidents_sampled;
  j["triage"] = task_report_json(triage);
  j["remediation"] = task_report_json(remediation);
  j["embeddings_upserted"] = embeddings_upserted;
  j["embeddings_evicted"] = embeddings_evicted;
  j["store_reset"] = store_reset;
  j["stage_seconds"] = stage_seconds;
  return j;
}

}  // namespace gr
