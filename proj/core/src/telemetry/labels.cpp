#include "gr/telemetry/labels.hpp"

#include <sstream>

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace gr {

bool LabelOverlay::set_incident_grade(const std::string& org_id, const std::string& incident_id, Grade grade) {
  auto [it, inserted] = grades_.try_emplace({org_id, incident_id}, grade);
  if (inserted) return true;
  if (it->second == grade) return false;
  it->second = grade;
  return true;
}

bool LabelOverlay::set_alert_action(const std::string& alert_id, Action action) {
  auto [it, inserted] = actions_.try_emplace(alert_id, action);
  if (inserted) return true;
  if (it->second == action) return false;
  it->second = action;
  return true;
}

std::optional<Grade> LabelOverlay::incident_grade(const std::string& org_id, const std::string& incident_id) const {
  auto it = grades_.find({org_id, incident_id});
  if (it == grades_.end()) return std::nullopt;
  return it->second;
}

std::optional<Action> LabelOverlay::alert_action(const std::string& alert_id) const {
  auto it = actions_.find(alert_id);
  if (it == actions_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelOverlay::apply(std::vector<AlertRecord>& alerts) const {
  std::size_t written = 0;
  for (auto& alert : alerts) {
    if (auto g = incident_grade(alert.org_id, alert.incident_id)) {
      alert.grade = g;
      ++written;
    }
    if (auto a = alert_action(alert.alert_id)) {
      alert.action = a;
      ++written;
    }
  }
  return written;
}

std::string LabelOverlay::serialize() const {
  std::ostringstream out;
  out << "gr-labels 1\n";
  for (const auto& [key, grade] : grades_) {
    out << "grade\t" << escape_field(key.first) << '\t' << escape_field(key.second) << '\t' << to_string(grade)
        << '\n';
  }
  for (const auto& [alert, action] : actions_) {
    out << "action\t" << escape_field(alert) << '\t' << to_string(action) << '\n';
  }
  return std::move(out).str();
}

LabelOverlay LabelOverlay::parse(std::string_view text) {
  LabelOverlay overlay;
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0] != "gr-labels 1") throw SchemaError("not a label overlay file");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f[0] == "grade" && f.size() == 4) {
      auto g = parse_grade(f[3]);
      if (!g) throw SchemaError(fmt::format("label overlay line {}: bad grade", i + 1));
      overlay.set_incident_grade(unescape_field(f[1]), unescape_field(f[2]), *g);
    } else if (f[0] == "action" && f.size() == 3) {
      auto a = parse_action(f[2]);
      if (!a) throw SchemaError(fmt::format("label overlay line {}: bad action", i + 1));
      overlay.set_alert_action(unescape_field(f[1]), *a);
    } else {
      throw SchemaError(fmt::format("label overlay line {}: unrecognized record", i + 1));
    }
  }
  return overlay;
}

void LabelOverlay::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

LabelOverlay LabelOverlay::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse(read_file(path));
}

}  // namespace gr
