#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gr/common/time.hpp"

namespace gr {

enum class Grade : std::uint8_t { TP = 0, FP = 1, BP = 2 };
inline constexpr std::size_t kGradeCount = 3;
inline constexpr std::array<Grade, kGradeCount> kAllGrades{Grade::TP, Grade::FP, Grade::BP};

enum class Action : std::uint8_t { ContainAccount = 0, IsolateDevice = 1, StopVirtualMachine = 2 };
inline constexpr std::size_t kActionCount = 3;
inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::ContainAccount, Action::IsolateDevice, Action::StopVirtualMachine};

std::string_view to_string(Grade grade);
std::string_view to_string(Action action);

// Accepts the canonical names plus the long GUIDE spellings
// ("TruePositive", "contain user", "Stop VM", ...). Case and separators are ignored.
std::optional<Grade> parse_grade(std::string_view text);
std::optional<Action> parse_action(std::string_view text);

// GUIDE entity kinds. Unknown is the sentinel for anything outside the 33.
enum class EntityType : std::uint8_t {
  Ip,
  User,
  MailMessage,
  Machine,
  File,
  Url,
  CloudLogonRequest,
  Mailbox,
  Process,
  CloudApplication,
  MailCluster,
  AzureResource,
  RegistryValue,
  RegistryKey,
  CloudLogonSession,
  OAuthApplication,
  SecurityGroup,
  Malware,
  Nic,
  IoTDevice,
  ActiveDirectoryDomain,
  AmazonResource,
  GenericEntity,
  GoogleCloudResource,
  BlobContainer,
  Blob,
  Container,
  ContainerImage,
  ContainerRegistry,
  KubernetesCluster,
  KubernetesNamespace,
  KubernetesPod,
  MailboxConfiguration,
  Unknown,
};
inline constexpr std::size_t kKnownEntityTypeCount = 33;

std::string_view to_string(EntityType type);
EntityType parse_entity_type(std::string_view text);

// Per-evidence GUIDE attribute columns.
enum class EvidenceAttr : std::uint8_t {
  DeviceId,
  DeviceName,
  Sha256,
  IpAddress,
  Url,
  AccountSid,
  AccountUpn,
  AccountObjectId,
  AccountName,
  NetworkMessageId,
  EmailClusterId,
  RegistryKey,
  RegistryValueName,
  RegistryValueData,
  ApplicationId,
  ApplicationName,
  OAuthApplicationId,
  ThreatFamily,
  FileName,
  FolderPath,
  ResourceIdName,
  ResourceType,
  Roles,
  OSFamily,
  OSVersion,
  AntispamDirection,
  SuspicionLevel,
  LastVerdict,
  CountryCode,
  State,
  City,
};
inline constexpr std::size_t kEvidenceAttrCount = 31;

std::string_view column_name(EvidenceAttr attr);

struct EvidenceRecord {
  EntityType entity_type = EntityType::Unknown;
  std::string raw_entity_type;  // kept verbatim when entity_type is Unknown
  std::string evidence_role;
  // Only non-empty attributes are stored, sorted by attribute.
  std::vector<std::pair<EvidenceAttr, std::string>> attributes;

  std::optional<std::string_view> attr(EvidenceAttr which) const;
  void set_attr(EvidenceAttr which, std::string value);

  // First non-empty of AccountObjectId, AccountUpn, AccountSid, AccountName.
  std::optional<std::string_view> account_identity() const;

  bool operator==(const EvidenceRecord&) const = default;
};

struct AlertRecord {
  std::string alert_id;
  std::string incident_id;
  std::string org_id;
  std::string detector_id;
  std::string product_id;
  std::string category;
  std::string alert_title;
  int severity = 0;  // Informational=0 .. High=3
  Timestamp timestamp = kEpoch;
  std::vector<std::string> mitre_techniques;  // sorted, unique
  std::vector<EvidenceRecord> evidence;
  std::optional<Grade> grade;
  std::optional<Action> action;

  bool operator==(const AlertRecord&) const = default;
};

// Maps Informational/Low/Medium/High to 0..3; nullopt for anything else.
std::optional<int> parse_severity(std::string_view text);

// "org:incident", the key used wherever an incident must be named globally.
std::string incident_key(std::string_view org_id, std::string_view incident_id);
std::pair<std::string, std::string> split_incident_key(std::string_view key);

}  // namespace gr
