#pragma once

#include <optional>
#include <vector>

#include "gr/forest/forest.hpp"

namespace gr {

struct ScoredPrediction {
  std::uint32_t predicted = 0;
  double score = 0.0;  // winning vote fraction
  std::uint32_t label = 0;
};

// Smallest threshold t such that predictions of `cls` with score >= t reach
// precision >= target. nullopt when no threshold qualifies or the class is
// never predicted.
std::optional<double> calibrate_class(const std::vector<ScoredPrediction>& predictions, std::uint32_t cls,
                                      double target_precision);

std::vector<std::optional<double>> calibrate_thresholds(const std::vector<ScoredPrediction>& predictions,
                                                        std::size_t num_classes, double target_precision);

std::vector<ScoredPrediction> score_dataset(const ForestModel& model, const LabeledData& data);

// Scores `val`, sets model.thresholds and model.target_precision. Throws
// DataError on an empty validation set.
void calibrate_thresholds(ForestModel& model, const LabeledData& val, double target_precision);

struct EmissionStats {
  std::size_t emitted = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> emitted_per_class;
  std::vector<std::size_t> correct_per_class;

  double coverage() const;
  double precision() const;  // pooled over classes; 0 when nothing was emitted
  std::optional<double> class_precision(std::size_t cls) const;
};

EmissionStats emission_stats(const std::vector<ScoredPrediction>& predictions,
                             const std::vector<std::optional<double>>& thresholds);

}  // namespace gr
