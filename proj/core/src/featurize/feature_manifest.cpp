#include "gr/featurize/feature_manifest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "gr/common/error.hpp"

namespace gr {
namespace {

// Distinct-value dimensions. Each entry lists the attributes tried in order.
struct DistinctDim {
  std::string_view name;
  std::vector<EvidenceAttr> attrs;
  bool account = false;
};

const std::vector<DistinctDim>& distinct_dims() {
  static const std::vector<DistinctDim> dims{
      {"distinct_device", {EvidenceAttr::DeviceId, EvidenceAttr::DeviceName}},
      {"distinct_ip", {EvidenceAttr::IpAddress}},
      {"distinct_url", {EvidenceAttr::Url}},
      {"distinct_account", {}, true},
      {"distinct_sha256", {EvidenceAttr::Sha256}},
      {"distinct_file_name", {EvidenceAttr::FileName}},
      {"distinct_registry_key", {EvidenceAttr::RegistryKey}},
      {"distinct_application", {EvidenceAttr::ApplicationId, EvidenceAttr::ApplicationName}},
      {"distinct_resource", {EvidenceAttr::ResourceIdName}},
      {"distinct_email_cluster", {EvidenceAttr::EmailClusterId}},
      {"distinct_network_message", {EvidenceAttr::NetworkMessageId}},
      {"distinct_country", {EvidenceAttr::CountryCode}},
      {"distinct_state", {EvidenceAttr::State}},
      {"distinct_city", {EvidenceAttr::City}},
      {"distinct_folder_path", {EvidenceAttr::FolderPath}},
      {"distinct_threat_family", {EvidenceAttr::ThreatFamily}},
      {"distinct_os_family", {EvidenceAttr::OSFamily}},
      {"distinct_oauth_application", {EvidenceAttr::OAuthApplicationId}},
  };
  return dims;
}

FeatureManifest build_v1() {
  FeatureManifest m;
  m.version = std::string(kFeatureManifestV1);
  m.names = {"alert_count", "evidence_count"};
  for (const auto& d : distinct_dims()) m.names.emplace_back(d.name);
  for (std::size_t t = 0; t <= kKnownEntityTypeCount; ++t) {
    m.names.push_back(fmt::format("entity_{}", to_string(static_cast<EntityType>(t))));
  }
  for (const char* name : {"mitre_technique_count", "suspicion_flagged_count", "verdict_malicious_count",
                           "verdict_suspicious_count", "role_impacted_count", "role_related_count",
                           "antispam_inbound_count", "antispam_outbound_count", "severity", "hour_sin",
                           "hour_cos", "weekday_sin", "weekday_cos"}) {
    m.names.emplace_back(name);
  }
  return m;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::size_t FeatureManifest::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw NotFoundError(fmt::format("feature '{}' not in manifest {}", name, version));
  return static_cast<std::size_t>(it - names.begin());
}

const FeatureManifest& feature_manifest_v1() {
  static const FeatureManifest manifest = build_v1();
  return manifest;
}

const FeatureManifest& feature_manifest(std::string_view version) {
  if (version == kFeatureManifestV1) return feature_manifest_v1();
  throw ConfigError(fmt::format("unknown feature manifest version '{}'", version));
}

std::vector<double> extract_numeric_features(const AlertRecord& alert, const FeatureManifest& manifest) {
  if (manifest.version != kFeatureManifestV1) {
    throw ConfigError(fmt::format("no extractors for feature manifest '{}'", manifest.version));
  }
  std::vector<double> out;
  out.reserve(manifest.size());
  out.push_back(1.0);
  out.push_back(static_cast<double>(alert.evidence.size()));

  for (const auto& dim : distinct_dims()) {
    std::set<std::string_view> values;
    for (const auto& ev : alert.evidence) {
      std::optional<std::string_view> v;
      if (dim.account) {
        v = ev.account_identity();
      } else {
        for (auto a : dim.attrs) {
          if ((v = ev.attr(a))) break;
        }
      }
      if (v) values.insert(*v);
    }
    out.push_back(static_cast<double>(values.size()));
  }

  std::vector<double> per_type(kKnownEntityTypeCount + 1, 0.0);
  double suspicion = 0, malicious = 0, suspicious = 0, impacted = 0, related = 0, inbound = 0, outbound = 0;
  for (const auto& ev : alert.evidence) {
    per_type[static_cast<std::size_t>(ev.entity_type)] += 1.0;
    if (ev.attr(EvidenceAttr::SuspicionLevel)) suspicion += 1;
    if (auto v = ev.attr(EvidenceAttr::LastVerdict)) {
      if (iequals(*v, "Malicious")) malicious += 1;
      if (iequals(*v, "Suspicious")) suspicious += 1;
    }
    if (iequals(ev.evidence_role, "Impacted")) impacted += 1;
    if (iequals(ev.evidence_role, "Related")) related += 1;
    if (auto v = ev.attr(EvidenceAttr::AntispamDirection)) {
      if (iequals(*v, "Inbound")) inbound += 1;
      if (iequals(*v, "Outbound")) outbound += 1;
    }
  }
  out.insert(out.end(), per_type.begin(), per_type.end());
  out.push_back(static_cast<double>(alert.mitre_techniques.size()));
  out.push_back(suspicion);
  out.push_back(malicious);
  out.push_back(suspicious);
  out.push_back(impacted);
  out.push_back(related);
  out.push_back(inbound);
  out.push_back(outbound);
  out.push_back(static_cast<double>(std::clamp(alert.severity, 0, 3)));

  const auto secs = to_unix(alert.timestamp);
  const auto day_index = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
  const auto second_of_day = secs - day_index * 86400;
  const double hour = static_cast<double>(second_of_day) / 3600.0;
  const auto weekday = ((day_index + 4) % 7 + 7) % 7;  // 1970-01-01 was a Thursday
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  out.push_back(std::sin(kTwoPi * hour / 24.0));
  out.push_back(std::cos(kTwoPi * hour / 24.0));
  out.push_back(std::sin(kTwoPi * static_cast<double>(weekday) / 7.0));
  out.push_back(std::cos(kTwoPi * static_cast<double>(weekday) / 7.0));
  return out;
}

}  // namespace gr
