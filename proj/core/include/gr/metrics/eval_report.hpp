#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gr {

struct ClassScores {
  std::string name;
  std::size_t support = 0;  // true instances
  std::size_t predicted = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no predictions of this class; reported as 0
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double coverage = 1.0;
  std::vector<double> class_distribution;  // percent of support per class
  std::size_t total = 0;

  std::size_t errors() const;
  // Off-diagonal mass between two classes, both directions.
  std::size_t confusions_between(std::size_t a, std::size_t b) const;
};

// Predictions and labels are class indices into `classes`. Throws DataError
// on length mismatch or out-of-range labels.
EvalReport macro_scores(std::span<const std::uint32_t> predictions, std::span<const std::uint32_t> labels,
                        std::vector<std::string> classes);

// Emitted fraction; 0 for empty input.
double coverage(std::size_t emitted, std::size_t total);
double coverage(const std::vector<bool>& emitted);

// Triage-specific error taxonomy: TP<->FP confusions are the critical ones,
// confusions involving BP are not. Expects classes ordered TP, FP, BP.
struct TriageErrorSplit {
  std::size_t critical = 0;      // TP <-> FP
  std::size_t non_critical = 0;  // BP <-> {TP, FP}
};
TriageErrorSplit triage_error_split(const EvalReport& report);

// Single-row, fixed-column text table in the regional results layout:
// Supp, class distribution percentages, Pr, Re, F1, plus coverage.
std::string format_report_table(const EvalReport& report, std::string_view title);
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace gr
