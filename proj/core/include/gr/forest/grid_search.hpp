#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gr/forest/forest.hpp"

namespace gr {

struct ParamGrid {
  std::vector<std::uint32_t> n_estimators{100, 200, 300, 400};
  std::vector<std::uint32_t> max_depth{30, 50, 75, 100};
  std::vector<std::uint32_t> min_samples_split{5, 10, 15};
  std::vector<ClassWeight> class_weight{ClassWeight::Balanced, ClassWeight::None};

  std::size_t size() const;
  // Enumerates n_estimators, then depth, then min_samples_split, then class
  // weight (innermost). Point i gets seed `seed ^ i`.
  std::vector<ForestParams> expand(std::uint64_t seed) const;

  std::string serialize() const;  // "n=100,200 depth=30,50 mss=5 cw=balanced,none"
  static ParamGrid parse(std::string_view text);
  bool operator==(const ParamGrid&) const = default;
};

struct GridPointResult {
  ForestParams params;
  std::optional<double> val_macro_f1;  // nullopt when training failed
  std::string error;
  double seconds = 0.0;
};

struct GridSearchResult {
  ForestModel best;
  std::vector<GridPointResult> points;
};

// Trains every lattice point and keeps the highest validation macro-F1. Ties
// go to fewer trees, then smaller depth, then the lexicographically smaller
// (min_samples_split, class_weight). Throws DataError if every point fails or
// the grid is empty.
GridSearchResult grid_search(const LabeledData& train, const LabeledData& val, const std::vector<std::string>& classes,
                             const ParamGrid& grid, std::uint64_t seed, unsigned workers = 0);

}  // namespace gr
