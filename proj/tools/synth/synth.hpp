#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gr/common/time.hpp"
#include "gr/telemetry/types.hpp"

namespace gr {

// Synthetic telemetry in the GUIDE schema. Detectors carry a grade affinity
// and, for a subset of categories, a response action tied to an entity type.
// Incidents are drawn from recurring detector groups, so incident hashes
// repeat across organizations the way correlated detections do.
struct SynthOptions {
  std::size_t orgs = 300;
  std::size_t detectors = 1000;
  std::size_t detector_groups = 6000;
  std::size_t incidents = 100000;
  double extra_alert_rate = 0.35;  // geometric repeats of group members
  double label_noise = 0.05;       // per-alert grade flips
  double action_rate = 0.55;       // P(action) for a TP alert of an actionable detector
  double action_noise = 0.02;
  double org_bias = 0.35;          // strength of per-org grade tilt
  double ungraded_fraction = 0.0;  // incidents left without grades
  Seconds span = days(30);         // incidents start within [now - span, now)
  Timestamp now = from_unix(1'718'000'000);
  std::uint64_t seed = 7;
};

struct SynthSummary {
  std::size_t alerts = 0;
  std::size_t incidents = 0;
  std::size_t evidence_rows = 0;
  std::size_t actioned_alerts = 0;
  std::size_t distinct_hashes = 0;
};

std::vector<AlertRecord> synthesize_guide(const SynthOptions& options);
SynthSummary summarize(const std::vector<AlertRecord>& alerts);

// Splits the alerts over `files` CSV shards named part-000.csv, ...
void write_synth_csv(const std::filesystem::path& dir, const std::vector<AlertRecord>& alerts,
                     std::size_t files = 1);

}  // namespace gr
