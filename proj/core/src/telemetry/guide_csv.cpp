#include "gr/telemetry/guide_csv.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/telemetry/csv.hpp"

namespace gr {
namespace {

constexpr std::array<std::string_view, kGuideColumnCount> kColumns{
    "Id",
    "OrgId",
    "IncidentId",
    "AlertId",
    "Timestamp",
    "DetectorId",
    "AlertTitle",
    "Category",
    "MitreTechniques",
    "IncidentGrade",
    "ActionGrouped",
    "ActionGranular",
    "EntityType",
    "EvidenceRole",
    "Roles",
    "DeviceId",
    "DeviceName",
    "Sha256",
    "IpAddress",
    "Url",
    "AccountSid",
    "AccountUpn",
    "AccountObjectId",
    "AccountName",
    "NetworkMessageId",
    "EmailClusterId",
    "RegistryKey",
    "RegistryValueName",
    "RegistryValueData",
    "ApplicationId",
    "ApplicationName",
    "OAuthApplicationId",
    "ThreatFamily",
    "FileName",
    "FolderPath",
    "ResourceIdName",
    "ResourceType",
    "OSFamily",
    "OSVersion",
    "AntispamDirection",
    "SuspicionLevel",
    "LastVerdict",
    "CountryCode",
    "State",
    "City",
};

struct ColumnIndex {
  std::size_t org, incident, alert, timestamp, detector, title, category, mitre, grade, action,
      entity_type, evidence_role;
  std::array<std::size_t, kEvidenceAttrCount> attrs{};
  std::optional<std::size_t> product, severity;
  std::size_t width = 0;
};

ColumnIndex resolve_header(const std::vector<std::string>& header) {
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    if (i == 0 && name.size() >= 3 && static_cast<unsigned char>(name[0]) == 0xEF) name.erase(0, 3);  // BOM
    by_name.emplace(std::move(name), i);
  }
  for (auto name : kColumns) {
    if (!by_name.contains(std::string(name))) {
      throw SchemaError(fmt::format("GUIDE header is missing mandatory column '{}'", name));
    }
  }
  auto at = [&](std::string_view name) { return by_name.at(std::string(name)); };
  ColumnIndex idx{};
  idx.org = at("OrgId");
  idx.incident = at("IncidentId");
  idx.alert = at("AlertId");
  idx.timestamp = at("Timestamp");
  idx.detector = at("DetectorId");
  idx.title = at("AlertTitle");
  idx.category = at("Category");
  idx.mitre = at("MitreTechniques");
  idx.grade = at("IncidentGrade");
  idx.action = at("ActionGrouped");
  idx.entity_type = at("EntityType");
  idx.evidence_role = at("EvidenceRole");
  for (std::size_t a = 0; a < kEvidenceAttrCount; ++a) {
    idx.attrs[a] = at(column_name(static_cast<EvidenceAttr>(a)));
  }
  if (auto it = by_name.find("ProductId"); it != by_name.end()) idx.product = it->second;
  if (auto it = by_name.find("Severity"); it != by_name.end()) idx.severity = it->second;
  idx.width = header.size();
  return idx;
}

std::vector<std::string> split_techniques(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find_first_of(";,", start);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) out.emplace_back(token);
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

const std::array<std::string_view, kGuideColumnCount>& guide_columns() { return kColumns; }

IngestResult ingest_guide_csv(const std::filesystem::path& path, IngestLimits limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open GUIDE csv '{}'", path.string()));
  auto result = ingest_guide_csv(in, limits);
  if (in.bad()) throw IoError(fmt::format("read error on '{}'", path.string()));
  return result;
}

IngestResult ingest_guide_csv(std::istream& in, IngestLimits limits) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw SchemaError("GUIDE csv has no header row");
  const ColumnIndex idx = resolve_header(row);

  IngestResult result;
  std::unordered_map<std::string, std::size_t> alert_slot;

  while ((limits.max_rows == 0 || result.stats.rows_read < limits.max_rows) && reader.next(row)) {
    ++result.stats.rows_read;
    if (row.size() != idx.width || row[idx.alert].empty() || row[idx.incident].empty() ||
        row[idx.org].empty()) {
      ++result.stats.malformed_rows;
      continue;
    }

    auto [it, inserted] = alert_slot.try_emplace(row[idx.alert], result.alerts.size());
    if (inserted) {
      AlertRecord alert;
      alert.alert_id = row[idx.alert];
      alert.incident_id = row[idx.incident];
      alert.org_id = row[idx.org];
      alert.detector_id = row[idx.detector];
      alert.category = row[idx.category];
      alert.alert_title = row[idx.title];
      if (idx.product) alert.product_id = row[*idx.product];
      if (idx.severity && !row[*idx.severity].empty()) {
        if (auto sev = parse_severity(row[*idx.severity])) {
          alert.severity = *sev;
        } else {
          ++result.stats.unknown_severities;
        }
      }
      if (auto ts = parse_rfc3339(row[idx.timestamp])) {
        alert.timestamp = *ts;
      } else {
        ++result.stats.timestamp_errors;
      }
      alert.mitre_techniques = split_techniques(row[idx.mitre]);
      result.alerts.push_back(std::move(alert));
    }
    AlertRecord& alert = result.alerts[it->second];

    if (!alert.grade && !row[idx.grade].empty()) {
      if (auto g = parse_grade(row[idx.grade])) {
        alert.grade = g;
      } else {
        ++result.stats.unparsed_grades;
      }
    }
    if (!alert.action && !row[idx.action].empty()) {
      if (auto a = parse_action(row[idx.action])) {
        alert.action = a;
      } else {
        ++result.stats.unparsed_actions;
      }
    }

    const auto& type_text = row[idx.entity_type];
    if (type_text.empty()) continue;  // alert row without evidence
    EvidenceRecord ev;
    ev.entity_type = parse_entity_type(type_text);
    if (ev.entity_type == EntityType::Unknown) {
      ev.raw_entity_type = type_text;
      ++result.stats.unknown_entity_types;
    }
    ev.evidence_role = row[idx.evidence_role];
    for (std::size_t a = 0; a < kEvidenceAttrCount; ++a) {
      auto& value = row[idx.attrs[a]];
      if (!value.empty()) ev.attributes.emplace_back(static_cast<EvidenceAttr>(a), std::move(value));
    }
    alert.evidence.push_back(std::move(ev));
    ++result.stats.evidence_rows;
  }
  return result;
}

void write_guide_csv(std::ostream& out, std::span<const AlertRecord> alerts) {
  std::vector<std::string> header(kColumns.begin(), kColumns.end());
  header.emplace_back("ProductId");
  header.emplace_back("Severity");
  write_csv_row(out, header);

  static constexpr std::array<std::string_view, 4> kSeverityNames{"Informational", "Low", "Medium", "High"};
  std::vector<std::string> row(header.size());
  std::size_t row_id = 0;
  for (const auto& alert : alerts) {
    std::string techniques;
    for (const auto& t : alert.mitre_techniques) {
      if (!techniques.empty()) techniques.push_back(';');
      techniques += t;
    }
    auto emit = [&](const EvidenceRecord* ev) {
      std::fill(row.begin(), row.end(), std::string{});
      row[0] = std::to_string(row_id++);
      row[1] = alert.org_id;
      row[2] = alert.incident_id;
      row[3] = alert.alert_id;
      row[4] = format_rfc3339(alert.timestamp);
      row[5] = alert.detector_id;
      row[6] = alert.alert_title;
      row[7] = alert.category;
      row[8] = techniques;
      if (alert.grade) row[9] = std::string(to_string(*alert.grade));
      if (alert.action) row[10] = row[11] = std::string(to_string(*alert.action));
      if (ev) {
        row[12] = ev->entity_type == EntityType::Unknown ? ev->raw_entity_type
                                                         : std::string(to_string(ev->entity_type));
        if (row[12].empty()) row[12] = "Unknown";
        row[13] = ev->evidence_role;
        for (const auto& [attr, value] : ev->attributes) {
          const auto name = column_name(attr);
          const auto col = static_cast<std::size_t>(
              std::find(kColumns.begin(), kColumns.end(), name) - kColumns.begin());
          row[col] = value;
        }
      }
      row[kGuideColumnCount] = alert.product_id;
      row[kGuideColumnCount + 1] = std::string(kSeverityNames[std::clamp(alert.severity, 0, 3)]);
      write_csv_row(out, row);
    };
    if (alert.evidence.empty()) {
      emit(nullptr);
    } else {
      for (const auto& ev : alert.evidence) emit(&ev);
    }
  }
}

}  // namespace gr
