#include "gr/forest/grid_search.hpp"

#include <chrono>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"
#include "gr/metrics/eval_report.hpp"

namespace gr {
namespace {

std::vector<std::uint32_t> parse_counts(std::string_view key, std::string_view list) {
  std::vector<std::uint32_t> out;
  for (auto item : split(list, ',')) {
    std::int64_t v = 0;
    try {
      v = parse_int(trim(item));
    } catch (const Error&) {
      throw ConfigError(fmt::format("grid {} value '{}' is not an integer", key, trim(item)));
    }
    if (v < 1 || v > UINT32_MAX) throw ConfigError(fmt::format("grid {} value {} must be >= 1", key, v));
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

// Lower is preferred.
auto preference_key(const ForestParams& p) {
  return std::make_tuple(p.n_estimators, p.max_depth, p.min_samples_split, static_cast<int>(p.class_weight));
}

}  // namespace

std::size_t ParamGrid::size() const {
  return n_estimators.size() * max_depth.size() * min_samples_split.size() * class_weight.size();
}

std::vector<ForestParams> ParamGrid::expand(std::uint64_t seed) const {
  std::vector<ForestParams> out;
  out.reserve(size());
  for (auto n : n_estimators) {
    for (auto d : max_depth) {
      for (auto m : min_samples_split) {
        for (auto w : class_weight) {
          ForestParams p;
          p.n_estimators = n;
          p.max_depth = d;
          p.min_samples_split = m;
          p.class_weight = w;
          p.seed = seed ^ static_cast<std::uint64_t>(out.size());
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

std::string ParamGrid::serialize() const {
  std::vector<std::string_view> cw;
  for (auto w : class_weight) cw.push_back(to_string(w));
  return fmt::format("n={} depth={} mss={} cw={}", fmt::join(n_estimators, ","), fmt::join(max_depth, ","),
                     fmt::join(min_samples_split, ","), fmt::join(cw, ","));
}

ParamGrid ParamGrid::parse(std::string_view text) {
  ParamGrid g;
  for (auto token : split(trim(text), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("grid token '{}' has no '='", token));
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "n") {
      g.n_estimators = parse_counts(key, value);
    } else if (key == "depth") {
      g.max_depth = parse_counts(key, value);
    } else if (key == "mss") {
      g.min_samples_split = parse_counts(key, value);
    } else if (key == "cw") {
      g.class_weight.clear();
      for (auto item : split(value, ',')) {
        const auto w = parse_class_weight(trim(item));
        if (!w) throw ConfigError(fmt::format("unknown class weight '{}'", item));
        g.class_weight.push_back(*w);
      }
    } else {
      throw ConfigError(fmt::format("unknown grid key '{}'", key));
    }
  }
  if (g.size() == 0) throw ConfigError("grid is empty");
  return g;
}

GridSearchResult grid_search(const LabeledData& train, const LabeledData& val, const std::vector<std::string>& classes,
                             const ParamGrid& grid, std::uint64_t seed, unsigned workers) {
  const auto points = grid.expand(seed);
  if (points.empty()) throw DataError("grid search needs at least one lattice point");
  if (val.rows() == 0) throw DataError("grid search needs a non-empty validation set");

  GridSearchResult result;
  std::optional<double> best_f1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& params = points[i];
    GridPointResult point{params, std::nullopt, {}, 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      auto model = train_forest(train, classes, params, workers);
      const auto preds = predict_all(model, val);
      const double f1 = macro_scores(preds, val.labels, classes).macro_f1;
      point.val_macro_f1 = f1;
      const bool better = !best_f1 || f1 > *best_f1 ||
                          (f1 == *best_f1 && preference_key(params) < preference_key(result.best.params));
      if (better) {
        best_f1 = f1;
        result.best = std::move(model);
      }
    } catch (const Error& e) {
      point.error = e.what();
      spdlog::warn("grid point {} failed: {}", params.describe(), e.what());
    }
    point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (point.val_macro_f1) {
      spdlog::info("grid {}/{} {} val_macro_f1={:.4f} ({:.1f}s)", i + 1, points.size(), params.describe(),
                   *point.val_macro_f1, point.seconds);
    }
    result.points.push_back(std::move(point));
  }
  if (!best_f1) throw DataError(fmt::format("all {} grid points failed: {}", points.size(), result.points.front().error));
  return result;
}

}  // namespace gr
