#include "gr/telemetry/types.hpp"

#include <algorithm>
#include <cctype>

#include "gr/common/error.hpp"

namespace gr {
namespace {

std::string normalize_token(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

constexpr std::array<std::string_view, kKnownEntityTypeCount + 1> kEntityNames{
    "Ip",
    "User",
    "MailMessage",
    "Machine",
    "File",
    "Url",
    "CloudLogonRequest",
    "Mailbox",
    "Process",
    "CloudApplication",
    "MailCluster",
    "AzureResource",
    "RegistryValue",
    "RegistryKey",
    "CloudLogonSession",
    "OAuthApplication",
    "SecurityGroup",
    "Malware",
    "Nic",
    "IoTDevice",
    "ActiveDirectoryDomain",
    "AmazonResource",
    "GenericEntity",
    "GoogleCloudResource",
    "BlobContainer",
    "Blob",
    "Container",
    "ContainerImage",
    "ContainerRegistry",
    "KubernetesCluster",
    "KubernetesNamespace",
    "KubernetesPod",
    "MailboxConfiguration",
    "Unknown",
};

constexpr std::array<std::string_view, kEvidenceAttrCount> kAttrColumns{
    "DeviceId",        "DeviceName",        "Sha256",          "IpAddress",        "Url",
    "AccountSid",      "AccountUpn",        "AccountObjectId", "AccountName",      "NetworkMessageId",
    "EmailClusterId",  "RegistryKey",       "RegistryValueName", "RegistryValueData", "ApplicationId",
    "ApplicationName", "OAuthApplicationId", "ThreatFamily",   "FileName",         "FolderPath",
    "ResourceIdName",  "ResourceType",      "Roles",           "OSFamily",         "OSVersion",
    "AntispamDirection", "SuspicionLevel",  "LastVerdict",     "CountryCode",      "State",
    "City",
};

}  // namespace

std::string_view to_string(Grade grade) {
  switch (grade) {
    case Grade::TP: return "TP";
    case Grade::FP: return "FP";
    case Grade::BP: return "BP";
  }
  return "?";
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::ContainAccount: return "ContainAccount";
    case Action::IsolateDevice: return "IsolateDevice";
    case Action::StopVirtualMachine: return "StopVirtualMachine";
  }
  return "?";
}

std::optional<Grade> parse_grade(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "tp" || t == "truepositive") return Grade::TP;
  if (t == "fp" || t == "falsepositive") return Grade::FP;
  if (t == "bp" || t == "benignpositive") return Grade::BP;
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "containaccount" || t == "containuser" || t == "ca") return Action::ContainAccount;
  if (t == "isolatedevice" || t == "isolatemachine" || t == "id") return Action::IsolateDevice;
  if (t == "stopvirtualmachine" || t == "stopvm" || t == "vm") return Action::StopVirtualMachine;
  return std::nullopt;
}

std::string_view to_string(EntityType type) { return kEntityNames[static_cast<std::size_t>(type)]; }

EntityType parse_entity_type(std::string_view text) {
  const auto t = normalize_token(text);
  for (std::size_t i = 0; i < kKnownEntityTypeCount; ++i) {
    if (normalize_token(kEntityNames[i]) == t) return static_cast<EntityType>(i);
  }
  return EntityType::Unknown;
}

std::string_view column_name(EvidenceAttr attr) { return kAttrColumns[static_cast<std::size_t>(attr)]; }

std::optional<std::string_view> EvidenceRecord::attr(EvidenceAttr which) const {
  const auto it = std::lower_bound(attributes.begin(), attributes.end(), which,
                                   [](const auto& entry, EvidenceAttr key) { return entry.first < key; });
  if (it == attributes.end() || it->first != which) return std::nullopt;
  return std::string_view{it->second};
}

void EvidenceRecord::set_attr(EvidenceAttr which, std::string value) {
  const auto it = std::lower_bound(attributes.begin(), attributes.end(), which,
                                   [](const auto& entry, EvidenceAttr key) { return entry.first < key; });
  if (it != attributes.end() && it->first == which) {
    if (value.empty()) {
      attributes.erase(it);
    } else {
      it->second = std::move(value);
    }
  } else if (!value.empty()) {
    attributes.emplace(it, which, std::move(value));
  }
}

std::optional<std::string_view> EvidenceRecord::account_identity() const {
  for (auto which : {EvidenceAttr::AccountObjectId, EvidenceAttr::AccountUpn, EvidenceAttr::AccountSid,
                     EvidenceAttr::AccountName}) {
    if (auto v = attr(which)) return v;
  }
  return std::nullopt;
}

std::optional<int> parse_severity(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "informational" || t == "info") return 0;
  if (t == "low") return 1;
  if (t == "medium") return 2;
  if (t == "high") return 3;
  return std::nullopt;
}

std::string incident_key(std::string_view org_id, std::string_view incident_id) {
  std::string key;
  key.reserve(org_id.size() + incident_id.size() + 1);
  key.append(org_id).push_back(':');
  key.append(incident_id);
  return key;
}

std::pair<std::string, std::string> split_incident_key(std::string_view key) {
  const auto pos = key.find(':');
  if (pos == std::string_view::npos) throw Error("incident key must look like 'org:incident'");
  return {std::string(key.substr(0, pos)), std::string(key.substr(pos + 1))};
}

}  // namespace gr
