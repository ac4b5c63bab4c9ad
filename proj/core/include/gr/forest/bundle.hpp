#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gr/featurize/encoder.hpp"
#include "gr/forest/forest.hpp"
#include "gr/reduce/pca.hpp"

namespace gr {

// A self-contained scoring unit: encoder -> PCA -> forest.
//
// Directory layout:
//   manifest.txt  key/value lines (task, version, params, thresholds, metrics, ...)
//   trees.txt     one block per tree; "s <feature> <threshold> <left> <right>"
//                 for splits and "l <p_0> ... <p_k-1>" for leaves, in node order
//   encoder.txt   EncoderModel text format
//   pca.txt       PcaModel text format
struct ModelBundle {
  std::string task;  // "triage" or "remediation"
  ForestModel model;
  EncoderModel encoder;
  PcaModel pca;
  double tolerance = 0.03;
  std::uint64_t sampling_seed = 0;
};

std::string serialize_trees(const ForestModel& model);
void parse_trees(std::string_view text, ForestModel& model);
std::string serialize_manifest(const ModelBundle& bundle);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

// SHA-256 over the bundle files in fixed order.
std::string bundle_digest(const std::filesystem::path& dir);

}  // namespace gr
