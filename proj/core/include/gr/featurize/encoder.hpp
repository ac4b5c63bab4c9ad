#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gr/featurize/feature_manifest.hpp"
#include "gr/reduce/feature_matrix.hpp"
#include "gr/telemetry/types.hpp"

namespace gr {

enum class CategoricalColumn : std::uint8_t { Org, Detector, Product, Category, Severity, AlertTitle };
inline constexpr std::size_t kCategoricalColumnCount = 6;

std::string_view to_string(CategoricalColumn column);
std::string categorical_value(const AlertRecord& alert, CategoricalColumn column);

struct EncodedAlert {
  std::string alert_id;
  std::string incident_id;
  std::string org_id;
  std::string detector_id;
  Timestamp timestamp = kEpoch;
  std::vector<std::uint32_t> one_hot;  // strictly increasing, one per categorical column
  std::vector<double> numeric;          // manifest order
  std::optional<Grade> grade;
  std::optional<Action> action;
};

// One-hot vocabularies after infrequent-value compression. Layout: each
// column owns a contiguous block [vocabulary..., generic], blocks in column
// order, followed by the numeric features.
class EncoderModel {
 public:
  EncoderModel() = default;

  std::uint32_t min_cardinality() const { return min_cardinality_; }
  const std::string& manifest_version() const { return manifest_version_; }
  const FeatureManifest& manifest() const { return feature_manifest(manifest_version_); }

  std::size_t one_hot_dimension() const { return one_hot_dim_; }
  std::size_t numeric_dimension() const { return manifest().size(); }
  std::size_t dimension() const { return one_hot_dim_ + numeric_dimension(); }

  std::span<const std::string> vocabulary(CategoricalColumn column) const;
  std::uint32_t column_offset(CategoricalColumn column) const;
  std::uint32_t generic_index(CategoricalColumn column) const;
  // Unseen values resolve to the column's generic index.
  std::uint32_t index_of(CategoricalColumn column, const std::string& value) const;

  EncodedAlert encode(const AlertRecord& alert) const;

  // Full feature vector: one-hot indicators then numeric features (zeros dropped).
  SparseVector feature_vector(const EncodedAlert& alert) const;

  std::string serialize() const;
  static EncoderModel parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static EncoderModel load(const std::filesystem::path& path);

  bool operator==(const EncoderModel& other) const;

 private:
  friend EncoderModel fit_encoder(std::span<const AlertRecord>, std::uint32_t, const FeatureManifest&);
  void rebuild();

  std::uint32_t min_cardinality_ = 1;
  std::string manifest_version_ = std::string(kFeatureManifestV1);
  std::array<std::vector<std::string>, kCategoricalColumnCount> vocab_;
  std::array<std::unordered_map<std::string, std::uint32_t>, kCategoricalColumnCount> lookup_;
  std::array<std::uint32_t, kCategoricalColumnCount> offsets_{};
  std::size_t one_hot_dim_ = 0;
};

// Keeps exactly the values seen in >= min_cardinality alerts. Throws
// DataError on an empty stream and ConfigError when min_cardinality is 0.
EncoderModel fit_encoder(std::span<const AlertRecord> alerts, std::uint32_t min_cardinality,
                         const FeatureManifest& manifest = feature_manifest_v1());

inline EncodedAlert encode_alert(const EncoderModel& encoder, const AlertRecord& alert) {
  return encoder.encode(alert);
}

}  // namespace gr
