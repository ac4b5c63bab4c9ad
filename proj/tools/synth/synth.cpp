#include "synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/common/random.hpp"
#include "gr/featurize/incidents.hpp"
#include "gr/telemetry/guide_csv.hpp"

namespace gr {
namespace {

struct Category {
  const char* name;
  std::optional<Action> action;
  std::vector<EntityType> entities;  // the first one is the action target
};

const std::vector<Category>& categories() {
  using E = EntityType;
  static const std::vector<Category> table{
      {"InitialAccess", Action::ContainAccount, {E::User, E::Ip, E::CloudLogonRequest}},
      {"CredentialAccess", Action::ContainAccount, {E::User, E::Machine, E::Process}},
      {"Persistence", Action::ContainAccount, {E::User, E::OAuthApplication, E::CloudApplication}},
      {"PrivilegeEscalation", Action::ContainAccount, {E::User, E::SecurityGroup}},
      {"Execution", Action::IsolateDevice, {E::Machine, E::Process, E::File}},
      {"Malware", Action::IsolateDevice, {E::Machine, E::File, E::Malware}},
      {"Ransomware", Action::IsolateDevice, {E::Machine, E::File, E::Process, E::User}},
      {"LateralMovement", Action::IsolateDevice, {E::Machine, E::User, E::Ip}},
      {"CommandAndControl", Action::IsolateDevice, {E::Machine, E::Ip, E::Url}},
      {"CloudResourceAbuse", Action::StopVirtualMachine, {E::AzureResource, E::User, E::Ip}},
      {"Cryptomining", Action::StopVirtualMachine, {E::AmazonResource, E::Process}},
      {"CloudExfiltration", Action::StopVirtualMachine, {E::GoogleCloudResource, E::BlobContainer, E::Ip}},
      {"Discovery", std::nullopt, {E::Machine, E::User}},
      {"Exfiltration", std::nullopt, {E::MailMessage, E::Mailbox, E::User}},
      {"Phishing", std::nullopt, {E::MailMessage, E::Url, E::Mailbox}},
      {"SuspiciousActivity", std::nullopt, {E::User, E::Ip}},
      {"Collection", std::nullopt, {E::File, E::User}},
      {"DefenseEvasion", std::nullopt, {E::Machine, E::RegistryKey, E::RegistryValue}},
      {"Impact", std::nullopt, {E::Machine, E::File}},
      {"Exploit", std::nullopt, {E::Machine, E::Process, E::Url}},
  };
  return table;
}

constexpr std::array<double, kGradeCount> kGradePrior{0.35, 0.22, 0.43};  // TP, FP, BP

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) cdf_[k] = total += 1.0 / std::pow(static_cast<double>(k + 1), s);
    for (auto& c : cdf_) c /= total;
  }
  std::size_t operator()(Rng& rng) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), uniform_unit(rng));
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::size_t pick(Rng& rng, const std::array<double, kGradeCount>& p) {
  double u = uniform_unit(rng) * (p[0] + p[1] + p[2]);
  for (std::size_t i = 0; i < kGradeCount; ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  return kGradeCount - 1;
}

struct Detector {
  std::string id;
  std::size_t category = 0;
  std::string product;
  int severity = 0;
  std::string title;
  std::array<double, kGradeCount> grades{};
  std::vector<std::string> techniques;
  std::vector<EntityType> entities;
  std::optional<Action> action;
};

std::vector<Detector> make_detectors(const SynthOptions& o, Rng& rng) {
  const auto& cats = categories();
  std::vector<Detector> out(o.detectors);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& d = out[i];
    d.id = std::to_string(i);
    d.category = uniform_index(rng, cats.size());
    const auto& cat = cats[d.category];
    d.product = std::to_string(d.category % 7);
    d.title = std::to_string(i * 3 + uniform_index(rng, 3));
    const auto dominant = pick(rng, kGradePrior);
    const double p = 0.75 + 0.15 * uniform_unit(rng);
    for (std::size_t g = 0; g < kGradeCount; ++g) d.grades[g] = g == dominant ? p : (1 - p) / 2;
    d.severity = dominant == 0 ? 2 + static_cast<int>(uniform_index(rng, 2)) : static_cast<int>(uniform_index(rng, 3));
    const auto ntech = uniform_index(rng, 3);
    std::set<std::string> tech;
    for (std::size_t t = 0; t < ntech; ++t) tech.insert(fmt::format("T{}", 1000 + d.category * 20 + uniform_index(rng, 20)));
    d.techniques.assign(tech.begin(), tech.end());
    d.entities = cat.entities;
    if (d.entities.size() > 2 && uniform_unit(rng) < 0.5) d.entities.pop_back();
    d.action = cat.action;
  }
  return out;
}

struct Builder {
  const SynthOptions& o;
  Rng& rng;

  std::string org_value(std::string_view prefix, const std::string& org, std::size_t pool) {
    return fmt::format("{}{}-{}", prefix, org, uniform_index(rng, pool));
  }

  EvidenceRecord evidence(EntityType type, const std::string& org, bool impacted, Grade grade) {
    using A = EvidenceAttr;
    EvidenceRecord e;
    e.entity_type = type;
    e.evidence_role = impacted ? "Impacted" : "Related";
    switch (type) {
      case EntityType::User:
        e.set_attr(A::AccountObjectId, org_value("u", org, 400));
        e.set_attr(A::AccountName, org_value("n", org, 400));
        break;
      case EntityType::Machine:
        e.set_attr(A::DeviceId, org_value("dev", org, 300));
        e.set_attr(A::DeviceName, org_value("host", org, 300));
        e.set_attr(A::OSFamily, uniform_unit(rng) < 0.7 ? "Windows" : "Linux");
        break;
      case EntityType::Ip:
        e.set_attr(A::IpAddress, fmt::format("10.{}.{}.{}", uniform_index(rng, 256), uniform_index(rng, 256),
                                             uniform_index(rng, 256)));
        e.set_attr(A::CountryCode, std::to_string(uniform_index(rng, 40)));
        break;
      case EntityType::File:
      case EntityType::Process:
      case EntityType::Malware:
        e.set_attr(A::Sha256, fmt::format("{:016x}", rng()));
        e.set_attr(A::FileName, fmt::format("f{}.exe", uniform_index(rng, 500)));
        e.set_attr(A::FolderPath, fmt::format("C:\\p{}", uniform_index(rng, 50)));
        if (type == EntityType::Malware) e.set_attr(A::ThreatFamily, std::to_string(uniform_index(rng, 30)));
        break;
      case EntityType::Url:
        e.set_attr(A::Url, fmt::format("https://s{}.example", uniform_index(rng, 2000)));
        break;
      case EntityType::MailMessage:
      case EntityType::Mailbox:
        e.set_attr(A::NetworkMessageId, fmt::format("m{:x}", rng() >> 20));
        e.set_attr(A::AntispamDirection, uniform_unit(rng) < 0.8 ? "Inbound" : "Outbound");
        break;
      case EntityType::AzureResource:
      case EntityType::AmazonResource:
      case EntityType::GoogleCloudResource:
      case EntityType::BlobContainer:
        e.set_attr(A::ResourceIdName, org_value("vm", org, 100));
        e.set_attr(A::ResourceType, std::string(to_string(type)));
        break;
      case EntityType::CloudApplication:
      case EntityType::OAuthApplication:
        e.set_attr(A::ApplicationId, std::to_string(uniform_index(rng, 200)));
        e.set_attr(A::OAuthApplicationId, std::to_string(uniform_index(rng, 200)));
        break;
      case EntityType::RegistryKey:
      case EntityType::RegistryValue:
        e.set_attr(A::RegistryKey, fmt::format("HKLM\\k{}", uniform_index(rng, 100)));
        break;
      default:
        break;
    }
    // Verdicts lean with the grade.
    static constexpr std::array<std::array<double, 2>, kGradeCount> kVerdict{{{0.45, 0.30}, {0.04, 0.12}, {0.08, 0.40}}};
    const auto& v = kVerdict[static_cast<std::size_t>(grade)];
    const double u = uniform_unit(rng);
    if (u < v[0]) {
      e.set_attr(A::LastVerdict, "Malicious");
      e.set_attr(A::SuspicionLevel, "Suspicious");
    } else if (u < v[0] + v[1]) {
      e.set_attr(A::LastVerdict, "Suspicious");
      e.set_attr(A::SuspicionLevel, "Suspicious");
    }
    return e;
  }
};

}  // namespace

std::vector<AlertRecord> synthesize_guide(const SynthOptions& o) {
  if (o.orgs == 0 || o.detectors == 0 || o.detector_groups == 0) throw ConfigError("synth: counts must be positive");
  if (o.span <= Seconds{3600}) throw ConfigError("synth: span must exceed one hour");
  Rng rng(o.seed);
  const auto detectors = make_detectors(o, rng);
  const Zipf detector_pick(detectors.size(), 0.9);

  std::vector<std::vector<std::size_t>> groups(o.detector_groups);
  for (auto& g : groups) {
    const std::size_t size = 1 + uniform_index(rng, 2) + (uniform_unit(rng) < 0.3 ? uniform_index(rng, 3) : 0);
    std::set<std::size_t> members;
    while (members.size() < size) members.insert(detector_pick(rng));
    g.assign(members.begin(), members.end());
  }
  const Zipf group_pick(groups.size(), 0.8);

  std::vector<std::array<double, kGradeCount>> org_tilt(o.orgs);
  for (auto& t : org_tilt) {
    for (auto& x : t) x = std::exp(o.org_bias * (2 * uniform_unit(rng) - 1) * 2);
  }
  const Zipf org_pick(o.orgs, 1.0);
  std::vector<std::size_t> next_incident(o.orgs, 0);

  Builder b{o, rng};
  std::vector<AlertRecord> alerts;
  alerts.reserve(o.incidents * 3);
  std::size_t alert_seq = 0;
  const auto span_s = o.span.count() - 3600;
  for (std::size_t n = 0; n < o.incidents; ++n) {
    const auto org = org_pick(rng);
    const auto org_id = std::to_string(org);
    const auto incident_id = std::to_string(next_incident[org]++);
    const auto& group = groups[group_pick(rng)];

    std::array<double, kGradeCount> p{};
    for (auto d : group) {
      for (std::size_t g = 0; g < kGradeCount; ++g) p[g] += detectors[d].grades[g];
    }
    for (std::size_t g = 0; g < kGradeCount; ++g) p[g] *= org_tilt[org][g];
    const auto truth = static_cast<Grade>(pick(rng, p));
    const bool graded = uniform_unit(rng) >= o.ungraded_fraction;

    std::vector<std::size_t> members = group;
    while (uniform_unit(rng) < o.extra_alert_rate) members.push_back(group[uniform_index(rng, group.size())]);

    // TP activity skews toward night hours.
    auto t = to_unix(o.now) - 3600 - static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(span_s)));
    if (truth == Grade::TP && uniform_unit(rng) < 0.3) t = t / 86400 * 86400 + static_cast<std::int64_t>(uniform_index(rng, 5 * 3600));
    for (auto d : members) {
      const auto& det = detectors[d];
      AlertRecord a;
      a.alert_id = std::to_string(alert_seq++);
      a.incident_id = incident_id;
      a.org_id = org_id;
      a.detector_id = det.id;
      a.product_id = det.product;
      a.category = categories()[det.category].name;
      a.alert_title = det.title;
      a.severity = det.severity;
      a.timestamp = from_unix(std::min(t, to_unix(o.now) - 1));
      a.mitre_techniques = det.techniques;
      Grade g = truth;
      if (uniform_unit(rng) < o.label_noise) g = static_cast<Grade>((static_cast<std::size_t>(truth) + 1 + uniform_index(rng, 2)) % kGradeCount);
      for (std::size_t i = 0; i < det.entities.size(); ++i) {
        a.evidence.push_back(b.evidence(det.entities[i], org_id, i == 0, g));
      }
      if (uniform_unit(rng) < 0.3) a.evidence.push_back(b.evidence(EntityType::Ip, org_id, false, g));
      if (graded) a.grade = g;
      if (det.action && g == Grade::TP && uniform_unit(rng) < o.action_rate) {
        a.action = det.action;
        if (uniform_unit(rng) < o.action_noise) {
          a.action = static_cast<Action>((static_cast<std::size_t>(*det.action) + 1 + uniform_index(rng, 2)) % kActionCount);
        }
      }
      alerts.push_back(std::move(a));
      t += 60 + static_cast<std::int64_t>(uniform_index(rng, 1200));
    }
  }
  return alerts;
}

SynthSummary summarize(const std::vector<AlertRecord>& alerts) {
  SynthSummary s;
  s.alerts = alerts.size();
  std::set<std::string> incidents;
  std::map<std::string, std::vector<std::string>> detectors;
  for (const auto& a : alerts) {
    const auto key = incident_key(a.org_id, a.incident_id);
    incidents.insert(key);
    detectors[key].push_back(a.detector_id);
    s.evidence_rows += std::max<std::size_t>(1, a.evidence.size());
    if (a.action) ++s.actioned_alerts;
  }
  s.incidents = incidents.size();
  std::set<std::string> hashes;
  for (const auto& [key, ids] : detectors) hashes.insert(incident_hash(ids));
  s.distinct_hashes = hashes.size();
  return s;
}

void write_synth_csv(const std::filesystem::path& dir, const std::vector<AlertRecord>& alerts, std::size_t files) {
  files = std::max<std::size_t>(files, 1);
  std::filesystem::create_directories(dir);
  const std::size_t per = (alerts.size() + files - 1) / files;
  for (std::size_t f = 0; f < files; ++f) {
    const auto path = dir / fmt::format("part-{:03}.csv", f);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    const auto begin = std::min(alerts.size(), f * per);
    const auto end = std::min(alerts.size(), begin + per);
    write_guide_csv(out, std::span<const AlertRecord>(alerts.data() + begin, end - begin));
    if (!out) throw IoError(fmt::format("write failed for {}", path.string()));
  }
}

}  // namespace gr
