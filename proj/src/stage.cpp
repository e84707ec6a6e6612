#include "mhrag/stage.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/regex_util.hpp"

#include <array>
#include <fstream>

namespace mhrag::stage {

namespace {

constexpr std::array<std::pair<Concern, std::string_view>, 10> kConcernNames = {{
    {Concern::Bleeding, "bleeding"},
    {Concern::Fever, "fever"},
    {Concern::HeadacheVision, "headache_vision"},
    {Concern::FetalMovement, "fetal_movement"},
    {Concern::MentalHealth, "mental_health"},
    {Concern::DomesticViolence, "domestic_violence"},
    {Concern::Breastfeeding, "breastfeeding"},
    {Concern::Wound, "wound"},
    {Concern::BreathingChest, "breathing_chest"},
    {Concern::Other, "other"},
}};

}  // namespace

void PlatformMetadata::validate() const {
    if (gestational_week && (*gestational_week < 1 || *gestational_week > 45))
        throw InputError("gestational_week must be within 1-45");
    if (postpartum_weeks && *postpartum_weeks < 0) throw InputError("postpartum_weeks must be non-negative");
    if (newborn_age_days && *newborn_age_days < 0) throw InputError("newborn_age_days must be non-negative");
}

std::string_view to_string(Concern c) {
    for (const auto& [k, name] : kConcernNames)
        if (k == c) return name;
    return "other";
}

std::optional<Concern> parse_concern(std::string_view s) {
    for (const auto& [k, name] : kConcernNames)
        if (name == s) return k;
    return std::nullopt;
}

void PatternPack::add_pattern(std::string pattern, LifeStage stage, std::optional<std::string> example) {
    auto re = regex_util::compile(pattern);
    patterns_.push_back({std::move(pattern), stage, std::move(re), std::move(example)});
}

void PatternPack::add_keyword(std::string keyword, Concern tag) {
    auto re = regex_util::compile("\\b" + regex_util::escape(keyword));
    keywords_.push_back({std::move(keyword), tag, std::move(re)});
}

PatternPack PatternPack::load(std::istream& in, const std::string& source) {
    PatternPack pack;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        if (rec.contains("pattern")) {
            auto pattern = jsonl::require_string(rec, "pattern", source, line);
            auto stage_str = jsonl::require_string(rec, "stage", source, line);
            auto st = parse_life_stage(stage_str);
            if (!st) throw ParseError(source, line, "unknown stage '" + stage_str + "'");
            std::optional<std::string> example;
            if (auto it = rec.find("example"); it != rec.end() && it->is_string()) example = it->get<std::string>();
            try {
                pack.add_pattern(pattern, *st, std::move(example));
            } catch (const InputError& e) {
                throw ParseError(source, line, e.what());
            }
        } else if (rec.contains("keyword")) {
            auto kw = jsonl::require_string(rec, "keyword", source, line);
            auto tag_str = jsonl::require_string(rec, "concern_tag", source, line);
            auto tag = parse_concern(tag_str);
            if (!tag) throw ParseError(source, line, "unknown concern tag '" + tag_str + "'");
            pack.add_keyword(kw, *tag);
        } else {
            throw ParseError(source, line, "record has neither 'pattern' nor 'keyword'");
        }
    });
    return pack;
}

PatternPack PatternPack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open pattern pack " + path.string());
    return load(in, path.string());
}

LifeStage extract_stage(std::string_view query, const PlatformMetadata& meta, const PatternPack& pack) {
    if (meta.newborn_age_days) return LifeStage::Newborn;
    if (meta.postpartum_weeks) return LifeStage::Postpartum;
    if (meta.gestational_week) return LifeStage::MaternalPregnant;

    bool newborn = false, postpartum = false;
    for (const auto& p : pack.patterns()) {
        if (p.stage == LifeStage::MaternalPregnant) continue;  // pregnant is also the default
        if (!regex_util::search(query, p.re)) continue;
        if (p.stage == LifeStage::Newborn) newborn = true;
        if (p.stage == LifeStage::Postpartum) postpartum = true;
    }
    if (newborn) return LifeStage::Newborn;
    if (postpartum) return LifeStage::Postpartum;
    return LifeStage::MaternalPregnant;
}

ConcernTags extract_concerns(std::string_view query, LifeStage /*stage*/, const PatternPack& pack) {
    ConcernTags tags;
    for (const auto& k : pack.keywords())
        if (regex_util::search(query, k.re)) tags.insert(k.tag);
    return tags;
}

}  // namespace mhrag::stage
