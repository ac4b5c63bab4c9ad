#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gr {

enum class ClassWeight : std::uint8_t { None = 0, Balanced = 1 };
std::string_view to_string(ClassWeight weight);
std::optional<ClassWeight> parse_class_weight(std::string_view text);

struct ForestParams {
  std::uint32_t n_estimators = 100;
  std::uint32_t max_depth = 30;
  std::uint32_t min_samples_split = 5;
  ClassWeight class_weight = ClassWeight::None;
  std::uint64_t seed = 0;
  bool bootstrap = true;

  void validate() const;  // throws ConfigError when a count is 0
  std::string describe() const;
  bool operator==(const ForestParams&) const = default;
};

// Dense row-major training rows. Row keys identify rows independently of
// their position; bootstrap sampling and split tie-breaks use them.
struct LabeledData {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::uint64_t> row_keys;

  LabeledData() = default;
  LabeledData(std::size_t dim, std::size_t num_classes) : dim(dim), num_classes(num_classes) {}

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  void add(std::span<const double> x, std::uint32_t label, std::uint64_t key);
  std::vector<std::size_t> class_counts() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;  // index into leaf distributions
};

struct DecisionTree {
  std::size_t num_classes = 0;
  std::vector<TreeNode> nodes;       // nodes[0] is the root
  std::vector<double> leaf_values;   // num_leaves x num_classes, rows sum to 1

  std::span<const double> leaf_distribution(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaves() const { return num_classes ? leaf_values.size() / num_classes : 0; }
};

struct ModelMetrics {
  double val_macro_precision = 0.0;
  double val_macro_recall = 0.0;
  double val_macro_f1 = 0.0;
  double test_macro_precision = 0.0;
  double test_macro_recall = 0.0;
  double test_macro_f1 = 0.0;
  double test_coverage = 0.0;
  double test_emitted_precision = 0.0;
};

struct ForestModel {
  std::vector<std::string> classes;
  std::size_t input_dim = 0;
  ForestParams params;
  std::vector<DecisionTree> trees;
  // Per-class minimum winning score for emission; nullopt means never emit.
  std::vector<std::optional<double>> thresholds;
  double target_precision = 0.9;
  ModelMetrics metrics;
  std::uint32_t version = 0;
  std::uint32_t parent_version = 0;  // 0 when there was no champion
};

// Bootstrap-sampled Gini trees, floor(sqrt(d)) candidate features per split.
// Identical data, params and seed give identical trees regardless of the
// worker count or row order. Throws DataError when fewer than two classes are
// present or there are fewer rows than min_samples_split.
ForestModel train_forest(const LabeledData& train, std::vector<std::string> classes, const ForestParams& params,
                         unsigned workers = 0);

// Mean of per-tree leaf distributions. Throws DimensionError on a width mismatch.
std::vector<double> predict_scores(const ForestModel& model, std::span<const double> x);
std::uint32_t argmax(std::span<const double> scores);

struct Decision {
  std::uint32_t predicted = 0;
  double score = 0.0;
  bool emitted = false;
};
Decision decide(const ForestModel& model, std::span<const double> x);
Decision decide_from_scores(const ForestModel& model, std::span<const double> scores);

std::vector<std::uint32_t> predict_all(const ForestModel& model, const LabeledData& data);

}  // namespace gr
