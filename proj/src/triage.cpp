#include "mhrag/triage.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/regex_util.hpp"
#include "mhrag/simd/kernels.hpp"
#include "mhrag/text.hpp"

#include <algorithm>
#include <fstream>

namespace mhrag::triage {

const std::vector<std::string>& negation_terms() {
    static const std::vector<std::string> terms = {"not", "no", "never", "without", "denies"};
    return terms;
}

std::optional<std::size_t> find_negation(std::string_view text, std::size_t match_start, std::size_t window) {
    auto cps = text::decode_utf8(text);
    std::size_t idx = 0;
    while (idx < cps.size() && cps[idx].offset < match_start) ++idx;
    const std::size_t first_cp = idx >= window ? idx - window : 0;
    const std::size_t window_start = first_cp < cps.size() ? cps[first_cp].offset : text.size();

    std::optional<std::size_t> found;
    std::size_t i = 0;
    while (i < idx) {
        if (!text::is_word_char(cps[i].value)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && text::is_word_char(cps[j].value)) ++j;
        const std::size_t w_begin = cps[i].offset;
        const std::size_t w_end = j < cps.size() ? cps[j].offset : text.size();
        if (w_begin >= window_start && w_end <= match_start) {
            auto word = text::ascii_lower(text.substr(w_begin, w_end - w_begin));
            const auto& terms = negation_terms();
            if (std::find(terms.begin(), terms.end(), word) != terms.end()) found = w_begin;
        }
        i = j;
    }
    return found;
}

bool negation_guard(std::string_view text, std::size_t match_start, std::size_t window) {
    return find_negation(text, match_start, window).has_value();
}

// ---------------------------------------------------------------------------
// Rules

void RulePack::add(TriggerRule rule) {
    if (rule.level == RoutingLevel::Pass) throw InputError("rule " + rule.id + ": level must be EMERGENCY_NOW or SAME_DAY");
    if (rule.stages.empty()) throw InputError("rule " + rule.id + ": empty stage set");
    for (const auto& r : rules_)
        if (r.id == rule.id) throw InputError("duplicate rule id " + rule.id);
    rule.re = regex_util::compile(rule.pattern);
    rules_.push_back(std::move(rule));
}

RulePack RulePack::load(std::istream& in, const std::string& source) {
    RulePack pack;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        TriggerRule r;
        r.id = jsonl::require_string(rec, "id", source, line);
        auto level = jsonl::require_string(rec, "level", source, line);
        auto lv = parse_routing_level(level);
        if (!lv) throw ParseError(source, line, "unknown level '" + level + "'");
        r.level = *lv;
        r.category = jsonl::require_string(rec, "category", source, line);
        r.pattern = jsonl::require_string(rec, "pattern", source, line);
        auto it = rec.find("stages");
        if (it == rec.end() || !it->is_array()) throw ParseError(source, line, "missing 'stages' array");
        for (const auto& s : *it) {
            auto st = s.is_string() ? parse_life_stage(s.get<std::string>()) : std::nullopt;
            if (!st) throw ParseError(source, line, "unknown stage in rule " + r.id);
            r.stages.insert(*st);
        }
        if (auto ex = rec.find("example"); ex != rec.end() && ex->is_string()) r.example = ex->get<std::string>();
        try {
            pack.add(std::move(r));
        } catch (const InputError& e) {
            throw ParseError(source, line, e.what());
        }
    });
    return pack;
}

RulePack RulePack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open rule pack " + path.string());
    return load(in, path.string());
}

std::optional<RuleHit> rule_match(std::string_view query, LifeStage stage, RoutingLevel level, const RulePack& pack) {
    for (const auto& rule : pack.rules()) {
        if (rule.level != level || !rule.stages.contains(stage)) continue;
        for (const auto& m : regex_util::find_all(query, rule.re)) {
            if (!negation_guard(query, m.start)) return RuleHit{&rule, m.start, m.length};
        }
    }
    return std::nullopt;
}

std::vector<std::pair<std::size_t, std::size_t>> negated_spans(std::string_view text, const RulePack& pack) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& rule : pack.rules()) {
        for (const auto& m : regex_util::find_all(text, rule.re)) {
            if (auto neg = find_negation(text, m.start)) spans.emplace_back(*neg, m.start + m.length);
        }
    }
    std::sort(spans.begin(), spans.end());
    return spans;
}

std::string mask_negated(std::string_view text, const RulePack& pack) {
    std::string out(text);
    for (auto [b, e] : negated_spans(text, pack))
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(b), out.begin() + static_cast<std::ptrdiff_t>(e), ' ');
    return out;
}

// ---------------------------------------------------------------------------
// Crisis subtypes

void CrisisClassifier::add(TemplateId subtype, const std::string& pattern) {
    if (subtype == TemplateId::NowMH)
        mh_.push_back(regex_util::compile(pattern));
    else if (subtype == TemplateId::NowDV)
        dv_.push_back(regex_util::compile(pattern));
    else
        throw InputError("crisis keywords must be NOW-MH or NOW-DV");
}

CrisisClassifier CrisisClassifier::load(std::istream& in, const std::string& source) {
    CrisisClassifier c;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        auto sub = jsonl::require_string(rec, "subtype", source, line);
        auto id = parse_template_id(sub);
        if (!id) throw ParseError(source, line, "unknown subtype '" + sub + "'");
        try {
            c.add(*id, jsonl::require_string(rec, "pattern", source, line));
        } catch (const InputError& e) {
            throw ParseError(source, line, e.what());
        }
    });
    return c;
}

CrisisClassifier CrisisClassifier::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open crisis keyword pack " + path.string());
    return load(in, path.string());
}

TemplateId CrisisClassifier::classify(std::string_view query_en) const {
    for (const auto& re : mh_)
        if (regex_util::search(query_en, re)) return TemplateId::NowMH;
    for (const auto& re : dv_)
        if (regex_util::search(query_en, re)) return TemplateId::NowDV;
    return TemplateId::NowMED;
}

TemplateId classify_crisis_subtype(std::string_view query_en, const CrisisClassifier& classifier) {
    return classifier.classify(query_en);
}

// ---------------------------------------------------------------------------
// Semantic backstop

SemanticMatcher::SemanticMatcher(std::vector<std::pair<LifeStage, std::string>> bank,
                                 std::shared_ptr<const retrieval::EmbeddingProvider> encoder, double tau_now,
                                 double tau_sd)
    : encoder_(std::move(encoder)), tau_now_(tau_now), tau_sd_(tau_sd) {
    if (!encoder_) throw InputError("semantic matcher needs an encoder");
    if (!(tau_sd_ > 0.0 && tau_sd_ < tau_now_ && tau_now_ <= 1.0))
        throw InputError("thresholds must satisfy 0 < tau_sd < tau_now <= 1");
    for (auto& [stage, textv] : bank) {
        auto v = encoder_->embed(textv);
        if (v.size() != encoder_->dimension()) throw InputError("encoder returned wrong dimension");
        simd::normalize(v);
        banks_[static_cast<int>(stage)].push_back({std::move(textv), std::move(v)});
    }
    for (auto s : kAllStages)
        if (banks_[static_cast<int>(s)].empty())
            throw InputError("symptom bank is empty for stage " + std::string(to_string(s)));
}

std::vector<std::pair<LifeStage, std::string>> SemanticMatcher::load_bank(std::istream& in, const std::string& source) {
    std::vector<std::pair<LifeStage, std::string>> bank;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        auto textv = jsonl::require_string(rec, "canonical_text", source, line);
        std::vector<std::string> stages;
        if (auto it = rec.find("stage"); it != rec.end() && it->is_string()) {
            stages.push_back(it->get<std::string>());
        } else if (auto it2 = rec.find("stages"); it2 != rec.end() && it2->is_array()) {
            for (const auto& s : *it2)
                if (s.is_string()) stages.push_back(s.get<std::string>());
        }
        if (stages.empty()) throw ParseError(source, line, "bank entry needs 'stage' or 'stages'");
        for (const auto& s : stages) {
            auto st = parse_life_stage(s);
            if (!st) throw ParseError(source, line, "unknown stage '" + s + "'");
            bank.emplace_back(*st, textv);
        }
    });
    return bank;
}

std::vector<std::pair<LifeStage, std::string>> SemanticMatcher::load_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open symptom bank " + path.string());
    return load_bank(in, path.string());
}

const std::vector<BankEntry>& SemanticMatcher::bank(LifeStage s) const { return banks_[static_cast<int>(s)]; }

std::size_t SemanticMatcher::distinct_descriptions() const {
    std::set<std::string> seen;
    for (const auto& b : banks_)
        for (const auto& e : b) seen.insert(e.canonical);
    return seen.size();
}

SemanticHit SemanticMatcher::match_vector(std::span<const float> z, LifeStage stage) const {
    const auto& entries = bank(stage);
    SemanticHit best;
    best.similarity = -2.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double sim = simd::dot(z, entries[i].vector);
        if (sim > best.similarity) best = {entries[i].canonical, sim, i};
    }
    best.similarity = std::clamp(best.similarity, -1.0, 1.0);
    return best;
}

SemanticHit SemanticMatcher::match(std::string_view query_en, LifeStage stage) const {
    std::vector<float> z;
    try {
        z = encoder_->embed(query_en);
    } catch (const std::exception& e) {
        throw ProviderError(std::string("symptom encoder failed: ") + e.what());
    }
    if (z.size() != encoder_->dimension()) throw ProviderError("symptom encoder returned wrong dimension");
    simd::normalize(z);
    return match_vector(z, stage);
}

SemanticHit semantic_match(std::string_view query_en, LifeStage stage, const SemanticMatcher& matcher) {
    return matcher.match(query_en, stage);
}

// ---------------------------------------------------------------------------
// Routing

std::string_view to_string(Provenance::Kind k) {
    switch (k) {
        case Provenance::Kind::NowRule: return "now_rule";
        case Provenance::Kind::SameDayRule: return "same_day_rule";
        case Provenance::Kind::Semantic: return "semantic";
        case Provenance::Kind::Pass: return "pass";
    }
    return "pass";
}

nlohmann::json RoutingOutcome::to_json() const {
    nlohmann::json prov = {{"kind", std::string(to_string(provenance.kind))},
                           {"semantic_consulted", provenance.semantic_consulted},
                           {"degraded", provenance.degraded}};
    if (!provenance.rule_id.empty()) {
        prov["rule_id"] = provenance.rule_id;
        prov["category"] = provenance.category;
        prov["matched_text"] = provenance.matched_text;
    }
    if (provenance.semantic) {
        prov["canonical"] = provenance.semantic->canonical;
        prov["similarity"] = provenance.semantic->similarity;
    }
    if (!provenance.warnings.empty()) prov["warnings"] = provenance.warnings;
    return {{"level", std::string(to_string(level))},
            {"template", std::string(to_string(template_id))},
            {"provenance", std::move(prov)}};
}

namespace {

RoutingOutcome from_rule(const RuleHit& hit, std::string_view query, TemplateId tmpl) {
    RoutingOutcome out;
    out.level = hit.rule->level;
    out.template_id = tmpl;
    out.provenance.kind =
        hit.rule->level == RoutingLevel::EmergencyNow ? Provenance::Kind::NowRule : Provenance::Kind::SameDayRule;
    out.provenance.rule_id = hit.rule->id;
    out.provenance.category = hit.rule->category;
    out.provenance.matched_text = std::string(query.substr(hit.start, hit.length));
    return out;
}

}  // namespace

RoutingOutcome pre_gen_triage(std::string_view query, const std::optional<std::string>& query_en, LifeStage stage,
                              const stage::ConcernTags& /*concerns*/, const TriageEngine& engine) {
    // Subtype keywords read the English view; fall back to the original.
    const std::string_view subtype_text = query_en ? std::string_view(*query_en) : query;

    if (auto hit = rule_match(query, stage, RoutingLevel::EmergencyNow, engine.rules))
        return from_rule(*hit, query, engine.crisis.classify(subtype_text));

    if (auto hit = rule_match(query, stage, RoutingLevel::SameDay, engine.rules))
        return from_rule(*hit, query, TemplateId::SameDay);

    RoutingOutcome out;
    out.provenance.kind = Provenance::Kind::Pass;
    if (!engine.semantic) {
        out.provenance.warnings.push_back("semantic backstop disabled");
        return out;
    }
    if (!query_en) {
        out.provenance.degraded = true;
        out.provenance.warnings.push_back("no English view; semantic backstop skipped");
        return out;
    }
    auto masked = mask_negated(*query_en, engine.rules);
    if (text::tokenize(masked).empty()) {
        out.provenance.warnings.push_back("no un-negated content for semantic backstop");
        return out;
    }
    out.provenance.semantic_consulted = true;
    SemanticHit hit;
    try {
        hit = engine.semantic->match(masked, stage);
    } catch (const ProviderError& e) {
        out.provenance.degraded = true;
        out.provenance.warnings.push_back(e.what());
        return out;
    }
    out.provenance.semantic = hit;
    if (hit.similarity >= engine.semantic->tau_now()) {
        out.level = RoutingLevel::EmergencyNow;
        out.template_id = engine.crisis.classify(*query_en);
        out.provenance.kind = Provenance::Kind::Semantic;
    } else if (hit.similarity >= engine.semantic->tau_sd()) {
        out.level = RoutingLevel::SameDay;
        out.template_id = TemplateId::SameDay;
        out.provenance.kind = Provenance::Kind::Semantic;
    }
    return out;
}

}  // namespace mhrag::triage
