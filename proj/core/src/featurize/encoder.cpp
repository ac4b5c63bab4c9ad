#include "gr/featurize/encoder.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace gr {
namespace {

constexpr std::string_view kMagic = "gr-encoder 1";
constexpr std::array<std::string_view, kCategoricalColumnCount> kColumnNames{
    "org", "detector", "product", "category", "severity", "alert_title"};

}  // namespace

std::string_view to_string(CategoricalColumn column) { return kColumnNames[static_cast<std::size_t>(column)]; }

std::string categorical_value(const AlertRecord& alert, CategoricalColumn column) {
  switch (column) {
    case CategoricalColumn::Org: return alert.org_id;
    case CategoricalColumn::Detector: return alert.detector_id;
    case CategoricalColumn::Product: return alert.product_id;
    case CategoricalColumn::Category: return alert.category;
    case CategoricalColumn::Severity: return std::to_string(alert.severity);
    case CategoricalColumn::AlertTitle: return alert.alert_title;
  }
  return {};
}

void EncoderModel::rebuild() {
  std::uint32_t offset = 0;
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    offsets_[c] = offset;
    lookup_[c].clear();
    lookup_[c].reserve(vocab_[c].size());
    for (std::size_t i = 0; i < vocab_[c].size(); ++i) {
      lookup_[c].emplace(vocab_[c][i], offset + static_cast<std::uint32_t>(i));
    }
    offset += static_cast<std::uint32_t>(vocab_[c].size()) + 1;
  }
  one_hot_dim_ = offset;
}

std::span<const std::string> EncoderModel::vocabulary(CategoricalColumn column) const {
  return vocab_[static_cast<std::size_t>(column)];
}

std::uint32_t EncoderModel::column_offset(CategoricalColumn column) const {
  return offsets_[static_cast<std::size_t>(column)];
}

std::uint32_t EncoderModel::generic_index(CategoricalColumn column) const {
  const auto c = static_cast<std::size_t>(column);
  return offsets_[c] + static_cast<std::uint32_t>(vocab_[c].size());
}

std::uint32_t EncoderModel::index_of(CategoricalColumn column, const std::string& value) const {
  const auto& table = lookup_[static_cast<std::size_t>(column)];
  const auto it = table.find(value);
  return it == table.end() ? generic_index(column) : it->second;
}

EncodedAlert EncoderModel::encode(const AlertRecord& alert) const {
  EncodedAlert out;
  out.alert_id = alert.alert_id;
  out.incident_id = alert.incident_id;
  out.org_id = alert.org_id;
  out.detector_id = alert.detector_id;
  out.timestamp = alert.timestamp;
  out.grade = alert.grade;
  out.action = alert.action;
  out.one_hot.reserve(kCategoricalColumnCount);
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    const auto column = static_cast<CategoricalColumn>(c);
    out.one_hot.push_back(index_of(column, categorical_value(alert, column)));
  }
  out.numeric = extract_numeric_features(alert, manifest());
  return out;
}

SparseVector EncoderModel::feature_vector(const EncodedAlert& alert) const {
  SparseVector v;
  v.indices.reserve(alert.one_hot.size() + alert.numeric.size());
  v.values.reserve(alert.one_hot.size() + alert.numeric.size());
  for (auto idx : alert.one_hot) {
    v.indices.push_back(idx);
    v.values.push_back(1.0);
  }
  for (std::size_t j = 0; j < alert.numeric.size(); ++j) {
    if (alert.numeric[j] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(one_hot_dim_ + j));
      v.values.push_back(alert.numeric[j]);
    }
  }
  return v;
}

std::string EncoderModel::serialize() const {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "manifest " << manifest_version_ << '\n';
  out << "min_cardinality " << min_cardinality_ << '\n';
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    out << "column " << kColumnNames[c] << ' ' << vocab_[c].size() << '\n';
    for (const auto& v : vocab_[c]) out << escape_field(v) << '\n';
  }
  return std::move(out).str();
}

EncoderModel EncoderModel::parse(std::string_view text) {
  auto lines = split(text, '\n');
  std::size_t pos = 0;
  auto next = [&]() -> std::string_view {
    if (pos >= lines.size()) throw SchemaError("encoder bundle truncated");
    return lines[pos++];
  };
  auto keyed = [&](std::string_view key) {
    auto line = next();
    if (line.size() <= key.size() || line.substr(0, key.size()) != key || line[key.size()] != ' ') {
      throw SchemaError(fmt::format("encoder bundle: expected '{}'", key));
    }
    return line.substr(key.size() + 1);
  };
  if (next() != kMagic) throw SchemaError("not an encoder bundle (bad magic)");
  EncoderModel model;
  model.manifest_version_ = std::string(keyed("manifest"));
  (void)feature_manifest(model.manifest_version_);
  model.min_cardinality_ = static_cast<std::uint32_t>(parse_int(keyed("min_cardinality")));
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    const auto header = split(keyed("column"), ' ');
    if (header.size() != 2 || header[0] != kColumnNames[c]) {
      throw SchemaError(fmt::format("encoder bundle: expected column '{}'", kColumnNames[c]));
    }
    const auto n = static_cast<std::size_t>(parse_int(header[1]));
    model.vocab_[c].reserve(n);
    for (std::size_t i = 0; i < n; ++i) model.vocab_[c].push_back(unescape_field(next()));
  }
  model.rebuild();
  return model;
}

void EncoderModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

EncoderModel EncoderModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

bool EncoderModel::operator==(const EncoderModel& other) const {
  return min_cardinality_ == other.min_cardinality_ && manifest_version_ == other.manifest_version_ &&
         vocab_ == other.vocab_;
}

EncoderModel fit_encoder(std::span<const AlertRecord> alerts, std::uint32_t min_cardinality,
                         const FeatureManifest& manifest) {
  if (min_cardinality < 1) throw ConfigError("min_cardinality must be >= 1");
  if (alerts.empty()) throw DataError("cannot fit an encoder on an empty alert stream");
  (void)feature_manifest(manifest.version);

  EncoderModel model;
  model.min_cardinality_ = min_cardinality;
  model.manifest_version_ = manifest.version;
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    std::map<std::string, std::size_t> support;
    for (const auto& alert : alerts) ++support[categorical_value(alert, static_cast<CategoricalColumn>(c))];
    for (const auto& [value, count] : support) {
      if (count >= min_cardinality) model.vocab_[c].push_back(value);
    }
  }
  model.rebuild();
  return model;
}

}  // namespace gr
