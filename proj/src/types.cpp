#include "mhrag/types.hpp"

namespace mhrag {

std::string_view to_string(LifeStage s) {
    switch (s) {
        case LifeStage::MaternalPregnant: return "maternal_pregnant";
        case LifeStage::Postpartum: return "postpartum";
        case LifeStage::Newborn: return "newborn";
    }
    return "maternal_pregnant";
}

std::optional<LifeStage> parse_life_stage(std::string_view s) {
    for (auto st : kAllStages)
        if (to_string(st) == s) return st;
    // common aliases in fixture files
    if (s == "pregnant" || s == "pregnancy") return LifeStage::MaternalPregnant;
    if (s == "neonatal") return LifeStage::Newborn;
    return std::nullopt;
}

std::string_view to_string(RoutingLevel r) {
    switch (r) {
        case RoutingLevel::EmergencyNow: return "EMERGENCY_NOW";
        case RoutingLevel::SameDay: return "SAME_DAY";
        case RoutingLevel::Pass: return "PASS";
    }
    return "PASS";
}

std::optional<RoutingLevel> parse_routing_level(std::string_view s) {
    if (s == "EMERGENCY_NOW") return RoutingLevel::EmergencyNow;
    if (s == "SAME_DAY") return RoutingLevel::SameDay;
    if (s == "PASS") return RoutingLevel::Pass;
    return std::nullopt;
}

std::string_view to_string(TemplateId t) {
    switch (t) {
        case TemplateId::NowMH: return "NOW-MH";
        case TemplateId::NowDV: return "NOW-DV";
        case TemplateId::NowMED: return "NOW-MED";
        case TemplateId::SameDay: return "SAME-DAY";
        case TemplateId::Pass: return "PASS";
    }
    return "PASS";
}

std::optional<TemplateId> parse_template_id(std::string_view s) {
    for (auto t : kAllTemplates)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

RoutingLevel level_of(TemplateId t) {
    switch (t) {
        case TemplateId::NowMH:
        case TemplateId::NowDV:
        case TemplateId::NowMED: return RoutingLevel::EmergencyNow;
        case TemplateId::SameDay: return RoutingLevel::SameDay;
        case TemplateId::Pass: return RoutingLevel::Pass;
    }
    return RoutingLevel::Pass;
}

}  // namespace mhrag
