#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "gr/telemetry/types.hpp"

namespace gr {

inline constexpr std::size_t kGuideColumnCount = 45;

// The GUIDE columns, every one mandatory. Header matching is by name and
// order-insensitive; extra columns (Usage, ProductId, Severity) are tolerated
// and ProductId/Severity are read when present.
const std::array<std::string_view, kGuideColumnCount>& guide_columns();

struct IngestLimits {
  std::size_t max_rows = 0;  // 0 means unlimited
};

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t evidence_rows = 0;  // well-formed rows that carried an entity
  std::size_t malformed_rows = 0;
  std::size_t timestamp_errors = 0;
  std::size_t unknown_entity_types = 0;
  std::size_t unknown_severities = 0;
  std::size_t unparsed_grades = 0;
  std::size_t unparsed_actions = 0;
};

struct IngestResult {
  // Alerts in order of first appearance of their AlertId.
  std::vector<AlertRecord> alerts;
  IngestStats stats;
};

// Folds evidence rows into alerts by AlertId. Throws SchemaError naming the
// first missing column, IoError when the file cannot be read.
IngestResult ingest_guide_csv(const std::filesystem::path& path, IngestLimits limits = {});
IngestResult ingest_guide_csv(std::istream& in, IngestLimits limits = {});

// Writes one row per evidence item (an alert without evidence gets a single
// row with an empty EntityType). Extra ProductId and Severity columns are
// appended so the round trip is lossless.
void write_guide_csv(std::ostream& out, std::span<const AlertRecord> alerts);

}  // namespace gr
