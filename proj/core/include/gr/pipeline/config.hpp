#pragma once

#include <filesystem>
#include <string>

#include "gr/common/time.hpp"
#include "gr/forest/grid_search.hpp"
#include "gr/telemetry/split.hpp"

namespace gr {

// Key/value file, one "key = value" per line, '#' starts a comment.
// Durations take a unit suffix (15m, 180d, ...), the grid uses
// ParamGrid::serialize syntax and the split is "train,val,test".
struct PipelineConfig {
  std::uint32_t min_cardinality = 10;  // c
  std::uint32_t max_components = 40;   // k
  double variance_target = 0.95;
  std::uint32_t sample_cap = 1000;  // m
  std::uint32_t store_cap = 5;      // s
  ParamGrid grid;
  double triage_precision = 0.9;       // c_t
  double remediation_precision = 0.9;  // c_r
  double cosine_cutoff = 0.9;
  std::uint32_t similar_max = 5;
  Seconds horizon = days(180);
  Seconds inference_window = minutes(15);
  Seconds backfill_cadence = minutes(30);
  Seconds train_cadence = days(7);
  double tolerance = 0.03;
  std::uint64_t seed = 42;
  SplitFractions split;
  unsigned workers = 0;  // 0: one per hardware thread
  std::string entity_rules;  // path to a rule file; empty uses the built-in table
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 8080;

  void validate() const;  // throws ConfigError
  std::string serialize() const;
  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);
  // Applies one "key=value" override, as given on a command line.
  void set(std::string_view key, std::string_view value);
};

}  // namespace gr
