#pragma once

#include "mhrag/types.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mhrag::stage {

/// Host-platform metadata. Any populated field overrides text cues.
struct PlatformMetadata {
    std::optional<int> gestational_week;  // 1..45
    std::optional<int> postpartum_weeks;
    std::optional<int> newborn_age_days;

    bool empty() const { return !gestational_week && !postpartum_weeks && !newborn_age_days; }
    /// Throws InputError when a field is out of range.
    void validate() const;
};

enum class Concern {
    Bleeding,
    Fever,
    HeadacheVision,
    FetalMovement,
    MentalHealth,
    DomesticViolence,
    Breastfeeding,
    Wound,
    BreathingChest,
    Other,
};

std::string_view to_string(Concern c);
std::optional<Concern> parse_concern(std::string_view s);

using ConcernTags = std::set<Concern>;

/// Compiled stage patterns and concern keywords, loaded from a JSONL pack of
/// `{pattern, stage}` and `{keyword, concern_tag}` records. Matching is
/// case-insensitive. Immutable once built.
class PatternPack {
public:
    struct StagePattern {
        std::string source;
        LifeStage stage;
        std::regex re;
        std::optional<std::string> example;
    };
    struct ConcernKeyword {
        std::string keyword;
        Concern tag;
        std::regex re;
    };

    static PatternPack load(std::istream& in, const std::string& source);
    static PatternPack load(const std::filesystem::path& path);

    void add_pattern(std::string pattern, LifeStage stage, std::optional<std::string> example = std::nullopt);
    void add_keyword(std::string keyword, Concern tag);

    const std::vector<StagePattern>& patterns() const { return patterns_; }
    const std::vector<ConcernKeyword>& keywords() const { return keywords_; }

private:
    std::vector<StagePattern> patterns_;
    std::vector<ConcernKeyword> keywords_;
};

/// Metadata first (newborn age, then postpartum weeks, then gestational
/// week), then text cues. When several stages match in text the more
/// specific one wins: newborn over postpartum over pregnant. No cue means
/// maternal_pregnant.
LifeStage extract_stage(std::string_view query, const PlatformMetadata& meta, const PatternPack& pack);

/// Flat keyword lookup. Unknown content yields an empty set.
ConcernTags extract_concerns(std::string_view query, LifeStage stage, const PatternPack& pack);

}  // namespace mhrag::stage
