#include "gr/pipeline/entity_rules.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace gr {

EntityRules EntityRules::defaults() {
  EntityRules r;
  r.rules_.push_back({Action::ContainAccount, {EntityType::User}, "Impacted"});
  r.rules_.push_back({Action::IsolateDevice, {EntityType::Machine}, "Impacted"});
  r.rules_.push_back({Action::StopVirtualMachine,
                      {EntityType::AzureResource, EntityType::AmazonResource, EntityType::GoogleCloudResource},
                      "Impacted"});
  return r;
}

EntityRules EntityRules::parse(std::string_view text) {
  EntityRules r;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string_view> w;
    for (auto t : split(line, ' ')) {
      if (!t.empty()) w.push_back(t);
    }
    if (w.size() != 3) throw ConfigError(fmt::format("entity rules line {}: expected '<action> <role> <types>'", line_no));
    const auto action = parse_action(w[0]);
    if (!action) throw ConfigError(fmt::format("entity rules line {}: unknown action '{}'", line_no, w[0]));
    EntityRule rule{*action, {}, std::string(w[1])};
    for (auto t : split(w[2], ',')) {
      const auto type = parse_entity_type(trim(t));
      if (type == EntityType::Unknown) throw ConfigError(fmt::format("entity rules line {}: unknown type '{}'", line_no, t));
      rule.entity_types.push_back(type);
    }
    if (r.rule_for(rule.action)) throw ConfigError(fmt::format("entity rules line {}: duplicate action", line_no));
    r.rules_.push_back(std::move(rule));
  }
  return r;
}

EntityRules EntityRules::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string EntityRules::serialize() const {
  std::string out;
  for (const auto& rule : rules_) {
    std::vector<std::string_view> types;
    for (auto t : rule.entity_types) types.push_back(to_string(t));
    out += fmt::format("{} {} {}\n", to_string(rule.action), rule.preferred_role, fmt::join(types, ","));
  }
  return out;
}

const EntityRule* EntityRules::rule_for(Action action) const {
  for (const auto& r : rules_) {
    if (r.action == action) return &r;
  }
  return nullptr;
}

std::optional<std::string> entity_identifier(const EvidenceRecord& evidence) {
  auto first = [&](std::initializer_list<EvidenceAttr> attrs) -> std::optional<std::string> {
    for (auto a : attrs) {
      if (auto v = evidence.attr(a); v && !v->empty()) return std::string(*v);
    }
    return std::nullopt;
  };
  switch (evidence.entity_type) {
    case EntityType::User:
    case EntityType::Mailbox:
      if (auto id = evidence.account_identity()) return std::string(*id);
      return std::nullopt;
    case EntityType::Machine:
    case EntityType::IoTDevice:
      return first({EvidenceAttr::DeviceId, EvidenceAttr::DeviceName});
    case EntityType::AzureResource:
    case EntityType::AmazonResource:
    case EntityType::GoogleCloudResource:
      return first({EvidenceAttr::ResourceIdName});
    case EntityType::Ip:
      return first({EvidenceAttr::IpAddress});
    case EntityType::Url:
      return first({EvidenceAttr::Url});
    case EntityType::File:
    case EntityType::Process:
      return first({EvidenceAttr::Sha256, EvidenceAttr::FileName});
    default:
      return std::nullopt;
  }
}

std::optional<EntityRef> identify_entity(const AlertRecord& alert, Action action, const EntityRules& rules) {
  const auto* rule = rules.rule_for(action);
  if (!rule) return std::nullopt;
  std::optional<EntityRef> best;
  bool best_preferred = false;
  for (const auto& ev : alert.evidence) {
    if (std::find(rule->entity_types.begin(), rule->entity_types.end(), ev.entity_type) == rule->entity_types.end()) {
      continue;
    }
    auto id = entity_identifier(ev);
    if (!id) continue;
    EntityRef ref{ev.entity_type, std::move(*id), ev.evidence_role};
    const bool preferred = ev.evidence_role == rule->preferred_role;
    if (!best || (preferred && !best_preferred) ||
        (preferred == best_preferred && std::tie(ref.type, ref.id) < std::tie(best->type, best->id))) {
      best = std::move(ref);
      best_preferred = preferred;
    }
  }
  return best;
}

}  // namespace gr
