#include "gr/forest/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"

namespace gr {
namespace {

struct SortItem {
  double value;
  std::uint32_t rank;
  bool operator<(const SortItem& o) const { return value < o.value || (value == o.value && rank < o.rank); }
};

class TreeBuilder {
 public:
  TreeBuilder(const LabeledData& data, const ForestParams& params, const std::vector<double>& class_weight,
              const std::vector<std::uint32_t>& canonical, const std::vector<std::uint32_t>& rank,
              std::uint64_t tree_seed)
      : data_(data),
        params_(params),
        weight_(class_weight),
        canonical_(canonical),
        rank_(rank),
        classes_(data.num_classes),
        rng_(tree_seed) {
    tree_.num_classes = classes_;
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.dim)))));
  }

  DecisionTree build() {
    const std::size_t n = data_.rows();
    multiplicity_.assign(n, 0);
    if (params_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) ++multiplicity_[canonical_[uniform_index(rng_, n)]];
    } else {
      std::fill(multiplicity_.begin(), multiplicity_.end(), 1u);
    }
    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    for (auto r : canonical_) {
      if (multiplicity_[r] > 0) rows.push_back(r);
    }
    features_.resize(data_.dim);
    left_counts_.resize(classes_);
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::uint32_t> rows, std::size_t depth) {
    const auto node_index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    std::vector<std::uint64_t> counts(classes_, 0);
    for (auto r : rows) counts[data_.labels[r]] += multiplicity_[r];
    std::size_t present = 0;
    for (auto c : counts) present += c > 0;

    std::optional<Split> split;
    if (depth < params_.max_depth && rows.size() >= params_.min_samples_split && present > 1) {
      split = best_split(rows, counts);
    }
    if (!split) {
      make_leaf(node_index, counts);
      return node_index;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(split->left_rows);
    right.reserve(rows.size() - split->left_rows);
    for (auto r : rows) {
      (data_.features[r * data_.dim + split->feature] <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const auto l = grow(std::move(left), depth + 1);
    const auto rr = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(node_index)];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = rr;
    return node_index;
  }

  void make_leaf(std::int32_t node_index, const std::vector<std::uint64_t>& counts) {
    double total = 0.0;
    std::vector<double> w(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      w[c] = weight_[c] * static_cast<double>(counts[c]);
      total += w[c];
    }
    auto& node = tree_.nodes[static_cast<std::size_t>(node_index)];
    node.leaf = static_cast<std::int32_t>(tree_.leaves());
    for (std::size_t c = 0; c < classes_; ++c) tree_.leaf_values.push_back(total > 0 ? w[c] / total : 0.0);
    if (total <= 0) {
      // Degenerate all-zero weight node: fall back to raw counts.
      double raw = 0;
      for (auto c : counts) raw += static_cast<double>(c);
      for (std::size_t c = 0; c < classes_; ++c) {
        tree_.leaf_values[tree_.leaf_values.size() - classes_ + c] = static_cast<double>(counts[c]) / raw;
      }
    }
  }

  struct Split {
    std::size_t feature;
    double threshold;
    std::size_t left_rows;
  };

  // Maximizes sum_c (w_c L_c)^2 / W_L + sum_c (w_c R_c)^2 / W_R, which is
  // equivalent to minimizing the weighted child Gini impurity.
  std::optional<Split> best_split(const std::vector<std::uint32_t>& rows, const std::vector<std::uint64_t>& counts) {
    std::iota(features_.begin(), features_.end(), 0u);
    std::optional<Split> best;
    double best_score = -1.0;
    std::size_t informative = 0;
    sorted_.resize(rows.size());

    for (std::size_t drawn = 0; drawn < features_.size() && informative < mtry_; ++drawn) {
      const auto pick = drawn + static_cast<std::size_t>(uniform_index(rng_, features_.size() - drawn));
      std::swap(features_[drawn], features_[pick]);
      const std::size_t f = features_[drawn];

      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted_[i] = {data_.features[rows[i] * data_.dim + f], rank_[rows[i]]};
      }
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().value == sorted_.back().value) continue;
      ++informative;

      std::fill(left_counts_.begin(), left_counts_.end(), 0);
      std::size_t left_rows = 0;
      for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
        const auto r = canonical_[sorted_[i].rank];
        left_counts_[data_.labels[r]] += multiplicity_[r];
        ++left_rows;
        if (sorted_[i].value == sorted_[i + 1].value) continue;
        double wl = 0, wr = 0, sl = 0, sr = 0;
        for (std::size_t c = 0; c < classes_; ++c) {
          const double lc = weight_[c] * static_cast<double>(left_counts_[c]);
          const double rc = weight_[c] * static_cast<double>(counts[c] - left_counts_[c]);
          wl += lc;
          wr += rc;
          sl += lc * lc;
          sr += rc * rc;
        }
        if (wl <= 0 || wr <= 0) continue;
        const double score = sl / wl + sr / wr;
        if (score > best_score) {
          best_score = score;
          double threshold = 0.5 * (sorted_[i].value + sorted_[i + 1].value);
          if (threshold >= sorted_[i + 1].value) threshold = sorted_[i].value;
          best = Split{f, threshold, left_rows};
        }
      }
    }
    return best;
  }

  const LabeledData& data_;
  const ForestParams& params_;
  const std::vector<double>& weight_;
  const std::vector<std::uint32_t>& canonical_;
  const std::vector<std::uint32_t>& rank_;
  std::size_t classes_;
  std::size_t mtry_;
  Rng rng_;
  DecisionTree tree_;
  std::vector<std::uint32_t> multiplicity_;
  std::vector<std::uint32_t> features_;
  std::vector<SortItem> sorted_;
  std::vector<std::uint64_t> left_counts_;
};

std::uint64_t tree_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(0x5eedULL + index));
}

}  // namespace

std::string_view to_string(ClassWeight weight) { return weight == ClassWeight::Balanced ? "balanced" : "none"; }

std::optional<ClassWeight> parse_class_weight(std::string_view text) {
  if (text == "balanced") return ClassWeight::Balanced;
  if (text == "none" || text == "None") return ClassWeight::None;
  return std::nullopt;
}

void ForestParams::validate() const {
  if (n_estimators == 0 || max_depth == 0 || min_samples_split == 0) {
    throw ConfigError(fmt::format("forest parameters must be >= 1: {}", describe()));
  }
}

std::string ForestParams::describe() const {
  return fmt::format("n_estimators={} max_depth={} min_samples_split={} class_weight={} seed={}{}", n_estimators,
                     max_depth, min_samples_split, to_string(class_weight), seed, bootstrap ? "" : " bootstrap=off");
}

void LabeledData::add(std::span<const double> x, std::uint32_t label, std::uint64_t key) {
  if (x.size() != dim) throw DimensionError(fmt::format("row has {} features, dataset has {}", x.size(), dim));
  if (label >= num_classes) throw DataError(fmt::format("label {} outside {} classes", label, num_classes));
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
  row_keys.push_back(key);
}

std::vector<std::size_t> LabeledData::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto l : labels) ++counts[l];
  return counts;
}

std::span<const double> DecisionTree::leaf_distribution(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return {leaf_values.data() + static_cast<std::size_t>(nodes[i].leaf) * num_classes, num_classes};
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

ForestModel train_forest(const LabeledData& train, std::vector<std::string> classes, const ForestParams& params,
                         unsigned workers) {
  params.validate();
  if (classes.size() != train.num_classes) throw DataError("class name count does not match dataset classes");
  if (train.row_keys.size() != train.rows() || train.features.size() != train.rows() * train.dim) {
    throw DataError("training data arrays are inconsistent");
  }
  const auto counts = train.class_counts();
  const auto present = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  if (present < 2) throw DataError(fmt::format("need at least 2 classes to train, found {}", present));
  if (train.rows() < params.min_samples_split) {
    throw DataError(fmt::format("{} rows is below min_samples_split={}", train.rows(), params.min_samples_split));
  }

  std::vector<double> weight(train.num_classes, 1.0);
  if (params.class_weight == ClassWeight::Balanced) {
    for (std::size_t c = 0; c < train.num_classes; ++c) {
      weight[c] = counts[c] ? static_cast<double>(train.rows()) /
                                  (static_cast<double>(present) * static_cast<double>(counts[c]))
                            : 0.0;
    }
  }

  // Canonical order by row key so that results do not depend on row positions.
  std::vector<std::uint32_t> canonical(train.rows());
  std::iota(canonical.begin(), canonical.end(), 0u);
  std::sort(canonical.begin(), canonical.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (train.row_keys[a] != train.row_keys[b]) return train.row_keys[a] < train.row_keys[b];
    const auto ra = train.row(a), rb = train.row(b);
    if (!std::equal(ra.begin(), ra.end(), rb.begin())) {
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    }
    return train.labels[a] < train.labels[b];
  });
  std::vector<std::uint32_t> rank(train.rows());
  for (std::uint32_t i = 0; i < canonical.size(); ++i) rank[canonical[i]] = i;

  ForestModel model;
  model.classes = std::move(classes);
  model.input_dim = train.dim;
  model.params = params;
  model.trees.resize(params.n_estimators);
  model.thresholds.assign(train.num_classes, std::nullopt);

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, params.n_estimators);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < params.n_estimators; t = next++) {
      TreeBuilder builder(train, params, weight, canonical, rank, tree_seed(params.seed, t));
      model.trees[t] = builder.build();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return model;
}

std::vector<double> predict_scores(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim) {
    throw DimensionError(fmt::format("forest input has dimension {}, model expects {}", x.size(), model.input_dim));
  }
  std::vector<double> scores(model.classes.size(), 0.0);
  for (const auto& tree : model.trees) {
    const auto dist = tree.leaf_distribution(x);
    for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += dist[c];
  }
  const double n = static_cast<double>(model.trees.size());
  for (auto& s : scores) s /= n;
  return scores;
}

std::uint32_t argmax(std::span<const double> scores) {
  return static_cast<std::uint32_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

Decision decide_from_scores(const ForestModel& model, std::span<const double> scores) {
  Decision d;
  d.predicted = argmax(scores);
  d.score = scores[d.predicted];
  const auto& t = model.thresholds.at(d.predicted);
  d.emitted = t.has_value() && d.score >= *t;
  return d;
}

Decision decide(const ForestModel& model, std::span<const double> x) {
  return decide_from_scores(model, predict_scores(model, x));
}

std::vector<std::uint32_t> predict_all(const ForestModel& model, const LabeledData& data) {
  std::vector<std::uint32_t> out;
  out.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out.push_back(argmax(predict_scores(model, data.row(i))));
  return out;
}

}  // namespace gr
