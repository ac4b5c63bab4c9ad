#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gr/telemetry/types.hpp"

namespace gr {

struct EntityRule {
  Action action = Action::ContainAccount;
  std::vector<EntityType> entity_types;
  std::string preferred_role = "Impacted";
};

// Rule file: one rule per line, "<Action> <role> <EntityType>[,<EntityType>...]".
class EntityRules {
 public:
  static EntityRules defaults();
  static EntityRules parse(std::string_view text);
  static EntityRules load(const std::filesystem::path& path);
  std::string serialize() const;

  const EntityRule* rule_for(Action action) const;

 private:
  std::vector<EntityRule> rules_;
};

struct EntityRef {
  EntityType type = EntityType::Unknown;
  std::string id;  // account identity, device id/name or resource id
  std::string role;
  bool operator==(const EntityRef&) const = default;
  auto operator<=>(const EntityRef&) const = default;
};

// Candidates are evidence items whose type matches the rule and that carry an
// identifier. Evidence with the preferred role wins; ties go to the smallest
// (type, id). nullopt means "action without target".
std::optional<EntityRef> identify_entity(const AlertRecord& alert, Action action, const EntityRules& rules);

// Identifier used for an evidence item of the given type, if any.
std::optional<std::string> entity_identifier(const EvidenceRecord& evidence);

}  // namespace gr
