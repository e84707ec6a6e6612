#pragma once

#include "mhrag/retrieval/providers.hpp"
#include "mhrag/stage.hpp"
#include "mhrag/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mhrag::triage {

inline constexpr std::size_t kNegationWindow = 50;  // code points

/// Negation terms checked in the look-behind window, as whole words.
const std::vector<std::string>& negation_terms();

/// Byte offset of the nearest whole-word negation term that lies entirely
/// inside the `window` code points before `match_start`, if any.
std::optional<std::size_t> find_negation(std::string_view text, std::size_t match_start,
                                         std::size_t window = kNegationWindow);

/// True when the match at `match_start` must be suppressed.
bool negation_guard(std::string_view text, std::size_t match_start, std::size_t window = kNegationWindow);

struct TriggerRule {
    std::string id;
    RoutingLevel level;  // EmergencyNow or SameDay
    std::string category;
    std::string pattern;
    std::set<LifeStage> stages;
    std::optional<std::string> example;  // a string the pattern matches
    std::regex re;
};

struct RuleHit {
    const TriggerRule* rule;
    std::size_t start;
    std::size_t length;
};

/// Ordered rule list; within a level, file order decides which rule wins.
class RulePack {
public:
    /// JSONL {id, level, category, pattern, stages, example?}.
    static RulePack load(std::istream& in, const std::string& source);
    static RulePack load(const std::filesystem::path& path);

    /// Throws InputError on a bad pattern, empty stage set, duplicate id or
    /// a level other than EMERGENCY_NOW / SAME_DAY.
    void add(TriggerRule rule);
    const std::vector<TriggerRule>& rules() const { return rules_; }

private:
    std::vector<TriggerRule> rules_;
};

/// First rule of `level` applicable to `stage` with at least one
/// non-negated match.
std::optional<RuleHit> rule_match(std::string_view query, LifeStage stage, RoutingLevel level, const RulePack& pack);

/// Spans [negation term, end of match) for every negated rule match, any
/// level or stage. Used to keep denied symptoms out of semantic matching.
std::vector<std::pair<std::size_t, std::size_t>> negated_spans(std::string_view text, const RulePack& pack);

/// Blanks the negated spans with spaces.
std::string mask_negated(std::string_view text, const RulePack& pack);

/// Keyword lists for crisis subtypes; JSONL {subtype, pattern} with subtype
/// NOW-MH or NOW-DV.
class CrisisClassifier {
public:
    static CrisisClassifier load(std::istream& in, const std::string& source);
    static CrisisClassifier load(const std::filesystem::path& path);
    void add(TemplateId subtype, const std::string& pattern);

    /// Mental-health keywords first, then domestic violence, else NOW-MED.
    TemplateId classify(std::string_view query_en) const;

private:
    std::vector<std::regex> mh_;
    std::vector<std::regex> dv_;
};

struct BankEntry {
    std::string canonical;
    std::vector<float> vector;  // unit norm
};

struct SemanticHit {
    std::string canonical;
    double similarity = 0.0;
    std::size_t bank_index = 0;
};

/// Stage-conditioned bank of canonical emergency descriptions.
class SemanticMatcher {
public:
    /// Encodes every bank text with `encoder`. Throws InputError if any
    /// stage has an empty bank or the thresholds violate
    /// 0 < tau_sd < tau_now <= 1.
    SemanticMatcher(std::vector<std::pair<LifeStage, std::string>> bank,
                    std::shared_ptr<const retrieval::EmbeddingProvider> encoder, double tau_now = 0.50,
                    double tau_sd = 0.30);

    /// JSONL {stage | stages, canonical_text}.
    static std::vector<std::pair<LifeStage, std::string>> load_bank(const std::filesystem::path& path);
    static std::vector<std::pair<LifeStage, std::string>> load_bank(std::istream& in, const std::string& source);

    double tau_now() const { return tau_now_; }
    double tau_sd() const { return tau_sd_; }
    const std::vector<BankEntry>& bank(LifeStage s) const;
    /// Number of distinct canonical descriptions across all stages.
    std::size_t distinct_descriptions() const;
    const retrieval::EmbeddingProvider& encoder() const { return *encoder_; }

    /// Argmax cosine over the stage's bank, ties to the earlier entry.
    /// Encoder failures propagate as ProviderError.
    SemanticHit match(std::string_view query_en, LifeStage stage) const;
    SemanticHit match_vector(std::span<const float> z, LifeStage stage) const;

private:
    std::vector<BankEntry> banks_[3];
    std::shared_ptr<const retrieval::EmbeddingProvider> encoder_;
    double tau_now_;
    double tau_sd_;
};

SemanticHit semantic_match(std::string_view query_en, LifeStage stage, const SemanticMatcher& matcher);

TemplateId classify_crisis_subtype(std::string_view query_en, const CrisisClassifier& classifier);

/// How the routing decision was reached.
struct Provenance {
    enum class Kind { NowRule, SameDayRule, Semantic, Pass };
    Kind kind = Kind::Pass;
    std::string rule_id;
    std::string category;
    std::string matched_text;
    std::optional<SemanticHit> semantic;
    bool semantic_consulted = false;
    bool degraded = false;  // semantic stage unavailable
    std::vector<std::string> warnings;
};

std::string_view to_string(Provenance::Kind k);

struct RoutingOutcome {
    RoutingLevel level = RoutingLevel::Pass;
    TemplateId template_id = TemplateId::Pass;
    Provenance provenance;

    nlohmann::json to_json() const;
};

/// Immutable bundle of everything pre-generation triage reads.
struct TriageEngine {
    RulePack rules;
    CrisisClassifier crisis;
    std::shared_ptr<const SemanticMatcher> semantic;  // null disables the backstop
};

/// Three-step routing: NOW rules (then subtype), SAME_DAY rules, semantic
/// backstop on the English view (>= tau_now: EMERGENCY_NOW + subtype,
/// >= tau_sd: SAME_DAY, else PASS). Without an English view or with a
/// failing encoder the backstop is skipped and the outcome is flagged
/// degraded. Negated rule spans are blanked before encoding.
RoutingOutcome pre_gen_triage(std::string_view query, const std::optional<std::string>& query_en, LifeStage stage,
                              const stage::ConcernTags& concerns, const TriageEngine& engine);

}  // namespace mhrag::triage
