#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mhrag {

enum class LifeStage { MaternalPregnant, Postpartum, Newborn };

inline constexpr std::array<LifeStage, 3> kAllStages = {LifeStage::MaternalPregnant, LifeStage::Postpartum,
                                                        LifeStage::Newborn};

std::string_view to_string(LifeStage s);
std::optional<LifeStage> parse_life_stage(std::string_view s);

/// Triage routing level.
enum class RoutingLevel { EmergencyNow, SameDay, Pass };

std::string_view to_string(RoutingLevel r);
std::optional<RoutingLevel> parse_routing_level(std::string_view s);

/// Response template selector. Also the label vocabulary of the
/// label-first generation contract.
enum class TemplateId { NowMH, NowDV, NowMED, SameDay, Pass };

inline constexpr std::array<TemplateId, 5> kAllTemplates = {TemplateId::NowMH, TemplateId::NowDV, TemplateId::NowMED,
                                                            TemplateId::SameDay, TemplateId::Pass};

std::string_view to_string(TemplateId t);
std::optional<TemplateId> parse_template_id(std::string_view s);

/// Level implied by a template (NOW-* -> EMERGENCY_NOW etc).
RoutingLevel level_of(TemplateId t);

}  // namespace mhrag
