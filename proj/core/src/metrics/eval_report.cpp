#include "gr/metrics/eval_report.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gr/common/error.hpp"

namespace gr {

std::size_t EvalReport::errors() const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < confusion.size(); ++t) {
    for (std::size_t p = 0; p < confusion[t].size(); ++p) {
      if (t != p) n += confusion[t][p];
    }
  }
  return n;
}

std::size_t EvalReport::confusions_between(std::size_t a, std::size_t b) const {
  return confusion.at(a).at(b) + confusion.at(b).at(a);
}

EvalReport macro_scores(std::span<const std::uint32_t> predictions, std::span<const std::uint32_t> labels,
                        std::vector<std::string> classes) {
  if (predictions.size() != labels.size()) {
    throw DataError(fmt::format("{} predictions for {} labels", predictions.size(), labels.size()));
  }
  const std::size_t k = classes.size();
  EvalReport r;
  r.classes = std::move(classes);
  r.total = labels.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k || predictions[i] >= k) throw DataError("class index out of range");
    ++r.confusion[labels[i]][predictions[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    ClassScores s;
    s.name = r.classes[c];
    for (std::size_t j = 0; j < k; ++j) {
      s.support += r.confusion[c][j];
      s.predicted += r.confusion[j][c];
    }
    const double hit = static_cast<double>(r.confusion[c][c]);
    s.precision_undefined = s.predicted == 0;
    s.precision = s.predicted ? hit / static_cast<double>(s.predicted) : 0.0;
    s.recall = s.support ? hit / static_cast<double>(s.support) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
    r.class_distribution.push_back(r.total ? 100.0 * static_cast<double>(s.support) / static_cast<double>(r.total)
                                           : 0.0);
    r.per_class.push_back(std::move(s));
  }
  if (k > 0) {
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
  }
  return r;
}

double coverage(std::size_t emitted, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(emitted) / static_cast<double>(total);
}

double coverage(const std::vector<bool>& emitted) {
  std::size_t n = 0;
  for (bool e : emitted) n += e;
  return coverage(n, emitted.size());
}

TriageErrorSplit triage_error_split(const EvalReport& report) {
  if (report.classes.size() != 3) throw DataError("triage error split expects the three triage classes");
  return {report.confusions_between(0, 1), report.confusions_between(0, 2) + report.confusions_between(1, 2)};
}

std::string format_report_table(const EvalReport& report, std::string_view title) {
  std::ostringstream out;
  out << fmt::format("{:<14} {:>8}", title.empty() ? "model" : title, "Supp");
  for (const auto& c : report.classes) out << fmt::format(" {:>6}", "%" + c);
  out << fmt::format(" {:>5} {:>5} {:>5} {:>6}\n", "Pr", "Re", "F1", "Cov");
  out << fmt::format("{:<14} {:>8}", "", report.total);
  for (double pct : report.class_distribution) out << fmt::format(" {:>6.0f}", pct);
  out << fmt::format(" {:>5.2f} {:>5.2f} {:>5.2f} {:>6.2f}\n", report.macro_precision, report.macro_recall,
                     report.macro_f1, report.coverage);
  for (const auto& s : report.per_class) {
    out << fmt::format("  {:<12} supp={:<8} pr={:.3f}{} re={:.3f} f1={:.3f}\n", s.name, s.support, s.precision,
                       s.precision_undefined ? "(undef)" : "", s.recall, s.f1);
  }
  return std::move(out).str();
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["classes"] = r.classes;
  j["confusion"] = r.confusion;
  j["support"] = r.total;
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  j["coverage"] = r.coverage;
  j["class_distribution_percent"] = r.class_distribution;
  auto& per = j["per_class"] = nlohmann::json::array();
  for (const auto& s : r.per_class) {
    per.push_back({{"name", s.name},
                   {"support", s.support},
                   {"predicted", s.predicted},
                   {"precision", s.precision},
                   {"recall", s.recall},
                   {"f1", s.f1},
                   {"precision_undefined", s.precision_undefined}});
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.classes = j.at("classes").get<std::vector<std::string>>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  r.total = j.at("support").get<std::size_t>();
  r.macro_precision = j.at("macro_precision").get<double>();
  r.macro_recall = j.at("macro_recall").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.coverage = j.at("coverage").get<double>();
  r.class_distribution = j.at("class_distribution_percent").get<std::vector<double>>();
  for (const auto& s : j.at("per_class")) {
    ClassScores c;
    c.name = s.at("name").get<std::string>();
    c.support = s.at("support").get<std::size_t>();
    c.predicted = s.at("predicted").get<std::size_t>();
    c.precision = s.at("precision").get<double>();
    c.recall = s.at("recall").get<double>();
    c.f1 = s.at("f1").get<double>();
    c.precision_undefined = s.at("precision_undefined").get<bool>();
    r.per_class.push_back(std::move(c));
  }
  return r;
}

}  // namespace gr
