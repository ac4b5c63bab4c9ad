#include "gr/forest/calibration.hpp"

#include <algorithm>

#include "gr/common/error.hpp"

namespace gr {

std::optional<double> calibrate_class(const std::vector<ScoredPrediction>& predictions, std::uint32_t cls,
                                      double target_precision) {
  std::vector<std::pair<double, bool>> rows;
  for (const auto& p : predictions) {
    if (p.predicted == cls) rows.emplace_back(p.score, p.label == cls);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::optional<double> best;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tp += rows[i].second;
    // Only evaluate at the last row of each run of equal scores.
    if (i + 1 < rows.size() && rows[i + 1].first == rows[i].first) continue;
    const auto n = i + 1;
    // Same expression as EmissionStats::class_precision so the check is exact.
    if (static_cast<double>(tp) / static_cast<double>(n) >= target_precision) best = rows[i].first;
  }
  return best;
}

std::vector<std::optional<double>> calibrate_thresholds(const std::vector<ScoredPrediction>& predictions,
                                                        std::size_t num_classes, double target_precision) {
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    out[c] = calibrate_class(predictions, static_cast<std::uint32_t>(c), target_precision);
  }
  return out;
}

std::vector<ScoredPrediction> score_dataset(const ForestModel& model, const LabeledData& data) {
  std::vector<ScoredPrediction> out;
  out.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto scores = predict_scores(model, data.row(i));
    const auto c = argmax(scores);
    out.push_back({c, scores[c], data.labels[i]});
  }
  return out;
}

void calibrate_thresholds(ForestModel& model, const LabeledData& val, double target_precision) {
  if (val.rows() == 0) throw DataError("calibration needs a non-empty validation set");
  model.thresholds = calibrate_thresholds(score_dataset(model, val), model.classes.size(), target_precision);
  model.target_precision = target_precision;
}

double EmissionStats::coverage() const { return total ? static_cast<double>(emitted) / static_cast<double>(total) : 0.0; }

double EmissionStats::precision() const {
  return emitted ? static_cast<double>(correct) / static_cast<double>(emitted) : 0.0;
}

std::optional<double> EmissionStats::class_precision(std::size_t cls) const {
  if (cls >= emitted_per_class.size() || emitted_per_class[cls] == 0) return std::nullopt;
  return static_cast<double>(correct_per_class[cls]) / static_cast<double>(emitted_per_class[cls]);
}

EmissionStats emission_stats(const std::vector<ScoredPrediction>& predictions,
                             const std::vector<std::optional<double>>& thresholds) {
  EmissionStats s;
  s.total = predictions.size();
  s.emitted_per_class.assign(thresholds.size(), 0);
  s.correct_per_class.assign(thresholds.size(), 0);
  for (const auto& p : predictions) {
    const auto& t = thresholds.at(p.predicted);
    if (!t || p.score < *t) continue;
    ++s.emitted;
    ++s.emitted_per_class[p.predicted];
    if (p.label == p.predicted) {
      ++s.correct;
      ++s.correct_per_class[p.predicted];
    }
  }
  return s;
}

}  // namespace gr
