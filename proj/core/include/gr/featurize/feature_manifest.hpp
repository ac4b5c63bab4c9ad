#pragma once

#include <string>
#include <vector>

#include "gr/telemetry/types.hpp"

namespace gr {

// Ordered engineered numeric features. The order is frozen per version;
// a new feature set gets a new version tag.
struct FeatureManifest {
  std::string version;
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  std::size_t index_of(std::string_view name) const;  // throws NotFoundError
};

inline constexpr std::string_view kFeatureManifestV1 = "gr-features-v1";

// 67 features: counts over evidence, distinct entity counts, per-entity-kind
// counts, MITRE and verdict counts, severity, and cyclic hour/weekday.
const FeatureManifest& feature_manifest_v1();

// Resolves a manifest by version tag; throws ConfigError for unknown tags.
const FeatureManifest& feature_manifest(std::string_view version);

// Total: every entry finite, counts >= 0, cyclic entries in [-1, 1].
// Throws ConfigError if the manifest version is not one this build knows.
std::vector<double> extract_numeric_features(const AlertRecord& alert, const FeatureManifest& manifest);

}  // namespace gr
