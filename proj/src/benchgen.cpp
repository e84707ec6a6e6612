#include "mhrag/benchgen.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/text.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace mhrag::benchgen {

std::string_view to_string(EvidenceLabel l) {
    switch (l) {
        case EvidenceLabel::Direct: return "DIRECT";
        case EvidenceLabel::Related: return "RELATED";
        case EvidenceLabel::Irrelevant: return "IRRELEVANT";
    }
    return "IRRELEVANT";
}

std::optional<EvidenceLabel> parse_evidence_label(std::string_view s) {
    if (s == "DIRECT") return EvidenceLabel::Direct;
    if (s == "RELATED") return EvidenceLabel::Related;
    if (s == "IRRELEVANT") return EvidenceLabel::Irrelevant;
    return std::nullopt;
}

std::vector<std::string> BenchmarkItem::direct_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, l] : labels)
        if (l == EvidenceLabel::Direct) out.push_back(id);
    return out;
}

std::size_t BenchmarkItem::direct_count() const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](const auto& kv) { return kv.second == EvidenceLabel::Direct; }));
}

// ---------------------------------------------------------------------------
// Test-double providers

std::vector<std::string> content_words(std::string_view textv) {
    static const std::set<std::string> kStop = {
        "the",  "and",  "for",  "are",  "with", "that", "this", "from", "have", "has",  "was",   "were",
        "can",  "may",  "should", "will", "not",  "but",  "any",  "all",  "your", "you",  "about", "what",
        "when", "which", "into", "also", "its",  "their", "they", "them", "been", "more", "than",  "each",
        "there", "these", "those", "such", "should", "must", "does", "did",  "how",  "who",  "why",   "our",
        "per",  "out",  "off",  "other", "after", "before", "during", "within", "least", "most", "some", "very"};
    std::vector<std::string> out;
    for (auto& t : text::tokenize(textv)) {
        if (text::decode_utf8(t).size() < 3 || kStop.contains(t)) continue;
        if (std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
        out.push_back(std::move(t));
    }
    return out;
}

std::string KeywordQuestionGenerator::generate_question(const std::vector<const corpus::Chunk*>& chunks) const {
    if (chunks.empty()) throw ProviderError("question generator needs at least the anchor chunk");
    auto anchor_words = content_words(chunks[0]->text);
    std::map<std::string, std::size_t> anchor_tf;
    for (const auto& w : anchor_words) ++anchor_tf[w];
    std::vector<std::set<std::string>> cand_sets;
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        auto w = content_words(chunks[i]->text);
        cand_sets.emplace_back(w.begin(), w.end());
    }
    std::vector<std::string> chosen;
    auto covered = [&](const std::string& extra) {
        std::size_t n = 0;
        for (const auto& s : cand_sets) {
            bool all = s.contains(extra);
            for (const auto& c : chosen) all = all && s.contains(c);
            n += all;
        }
        return n;
    };
    for (std::size_t k = 0; k < n_terms_; ++k) {
        std::string best;
        std::tuple<std::size_t, std::size_t> best_key{0, 0};
        for (const auto& [w, tf] : anchor_tf) {
            if (std::find(chosen.begin(), chosen.end(), w) != chosen.end()) continue;
            std::tuple<std::size_t, std::size_t> key{covered(w), tf};
            if (best.empty() || key > best_key) {
                best = w;
                best_key = key;
            }
        }
        if (best.empty()) break;
        chosen.push_back(best);
    }
    if (chosen.empty()) throw ProviderError("anchor has no content words");
    std::string q = "What should I know about " + chosen[0];
    for (std::size_t i = 1; i < chosen.size(); ++i) q += (i + 1 == chosen.size() ? " and " : ", ") + chosen[i];
    return q + "?";
}

EvidenceLabel OverlapLabeler::label(const std::string& question, const corpus::Chunk& chunk) const {
    auto q = content_words(question);
    std::set<std::string> qs(q.begin(), q.end());
    // drop the fixed question scaffold
    qs.erase("know");
    auto c = content_words(chunk.text);
    std::set<std::string> cs(c.begin(), c.end());
    std::size_t hits = 0;
    for (const auto& w : qs) hits += cs.contains(w);
    if (!qs.empty() && hits == qs.size()) return EvidenceLabel::Direct;
    if (hits > 0) return EvidenceLabel::Related;
    return EvidenceLabel::Irrelevant;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

std::uint64_t item_seed(std::uint64_t seed, std::size_t index, int attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(attempt)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<std::string> expand(const DenseRetriever& r, std::string_view query, std::size_t k) {
    return retrieval::dense_retrieve(*r.index, query, k, *r.embedder).ids();
}

}  // namespace

Benchmark build_benchmark(const corpus::ChunkStore& store, const DenseRetriever& retriever,
                          const QuestionGenProvider& qgen, const LabelerProvider& labeler, const BuildOptions& opts) {
    if (store.empty()) throw InputError("cannot build a benchmark from an empty corpus");
    if (!retriever.index || !retriever.embedder) throw MissingArtifactError("benchmark builder needs a dense retriever");
    Benchmark bench;
    bench.corpus_digest = corpus::digest(store);
    bench.seed = opts.seed;

    for (std::size_t idx = 0; idx < opts.n_items; ++idx) {
        std::string reason = "no attempts";
        bool done = false;
        for (int attempt = 0; attempt < opts.max_attempts && !done; ++attempt) {
            ItemProvenance prov;
            prov.attempt = attempt;
            prov.item_seed = item_seed(opts.seed, idx, attempt);
            std::mt19937_64 rng(prov.item_seed);
            const auto& anchor = store.at(static_cast<std::size_t>(rng() % store.size()));
            prov.anchor_id = anchor.id;
            try {
                prov.anchor_candidates = expand(retriever, anchor.text, opts.k_dense);
                std::vector<const corpus::Chunk*> chunks{&anchor};
                for (const auto& id : prov.anchor_candidates)
                    if (id != anchor.id) chunks.push_back(&store.at(*store.position(id)));
                prov.question = qgen.generate_question(chunks);
                prov.question_candidates = expand(retriever, prov.question, opts.k_dense);

                std::vector<std::string> pool{anchor.id};
                for (const auto* list : {&prov.anchor_candidates, &prov.question_candidates})
                    for (const auto& id : *list)
                        if (std::find(pool.begin(), pool.end(), id) == pool.end()) pool.push_back(id);
                for (const auto& id : pool) prov.labels[id] = labeler.label(prov.question, store.at(*store.position(id)));
            } catch (const std::exception& e) {
                reason = std::string("provider failure: ") + e.what();
                continue;
            }
            BenchmarkItem item;
            item.question = prov.question;
            item.anchor_id = prov.anchor_id;
            item.labels = prov.labels;
            item.provenance = std::move(prov);
            if (item.direct_count() < 2) {
                reason = "fewer than 2 DIRECT chunks";
                continue;
            }
            bench.items.push_back(std::move(item));
            done = true;
        }
        if (!done) bench.skipped.push_back({idx, reason});
    }
    if (bench.items.size() < opts.n_items)
        bench.warnings.push_back("produced " + std::to_string(bench.items.size()) + " of " +
                                 std::to_string(opts.n_items) + " requested items");
    return bench;
}

BenchmarkStats benchmark_stats(const Benchmark& bench) {
    if (bench.items.empty()) throw InputError("benchmark_stats: empty benchmark");
    BenchmarkStats s;
    s.n_items = bench.items.size();
    s.min_direct = std::numeric_limits<std::size_t>::max();
    std::size_t total = 0;
    for (const auto& item : bench.items) {
        auto d = item.direct_count();
        total += d;
        s.min_direct = std::min(s.min_direct, d);
        s.max_direct = std::max(s.max_direct, d);
    }
    s.mean_direct = static_cast<double>(total) / static_cast<double>(s.n_items);
    return s;
}

AuditReport audit_gold(const Benchmark& bench, const std::vector<retrieval::ScoredList>& rankings,
                       const corpus::ChunkStore& store, const LabelerProvider& auditor, std::size_t depth) {
    AuditReport report;
    if (depth == 0) return report;
    if (rankings.size() != bench.items.size()) throw InputError("audit_gold: one ranking per item required");
    for (std::size_t i = 0; i < bench.items.size(); ++i) {
        const auto& item = bench.items[i];
        const auto& ranked = rankings[i];
        for (std::size_t r = 0; r < std::min(depth, ranked.size()); ++r) {
            const auto& id = ranked[r].chunk_id;
            auto it = item.labels.find(id);
            if (it != item.labels.end() && it->second == EvidenceLabel::Direct) continue;
            auto pos = store.position(id);
            if (!pos) throw InputError("audit_gold: ranking references unknown chunk " + id);
            ++report.audited;
            switch (auditor.label(item.question, store.at(*pos))) {
                case EvidenceLabel::Direct: ++report.newly_direct; break;
                case EvidenceLabel::Related: ++report.related; break;
                case EvidenceLabel::Irrelevant: ++report.irrelevant; break;
            }
        }
    }
    return report;
}

nlohmann::json AuditReport::to_json() const {
    return {{"audited", audited},
            {"newly_direct", newly_direct},
            {"related", related},
            {"irrelevant", irrelevant},
            {"frac_newly_direct", frac_newly_direct()},
            {"frac_related", frac_related()},
            {"frac_irrelevant", frac_irrelevant()}};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json labels_json(const std::map<std::string, EvidenceLabel>& labels) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, l] : labels) j[id] = std::string(to_string(l));
    return j;
}

std::map<std::string, EvidenceLabel> labels_from(const nlohmann::json& j) {
    std::map<std::string, EvidenceLabel> out;
    for (auto& [id, v] : j.items()) {
        auto l = parse_evidence_label(v.get<std::string>());
        if (!l) throw InputError("unknown evidence label '" + v.get<std::string>() + "' for chunk " + id);
        out.emplace(id, *l);
    }
    return out;
}

}  // namespace

nlohmann::json Benchmark::to_json() const {
    auto items_json = nlohmann::json::array();
    for (const auto& item : items) {
        const auto& p = item.provenance;
        items_json.push_back(
            {{"question", item.question},
             {"anchor_id", item.anchor_id},
             {"labels", labels_json(item.labels)},
             {"provenance",
              {{"anchor_sampling", {{"anchor_id", p.anchor_id}, {"item_seed", p.item_seed}, {"attempt", p.attempt}}},
               {"candidate_expansion", p.anchor_candidates},
               {"question_generation", {{"question", p.question}}},
               {"candidate_reexpansion", p.question_candidates},
               {"chunk_labelling", labels_json(p.labels)}}}});
    }
    auto skipped_json = nlohmann::json::array();
    for (const auto& s : skipped) skipped_json.push_back({{"index", s.index}, {"reason", s.reason}});
    return {{"version", kSchemaVersion}, {"corpus_digest", corpus_digest}, {"seed", seed},
            {"items", std::move(items_json)}, {"skipped", std::move(skipped_json)}, {"warnings", warnings}};
}

Benchmark Benchmark::from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != kSchemaVersion) throw InputError("unsupported benchmark schema version");
        Benchmark b;
        b.corpus_digest = j.at("corpus_digest").get<std::string>();
        b.seed = j.value("seed", std::uint64_t{0});
        const auto& items = j.at("items");
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& ij = items[i];
            BenchmarkItem item;
            item.question = ij.at("question").get<std::string>();
            item.anchor_id = ij.at("anchor_id").get<std::string>();
            item.labels = labels_from(ij.at("labels"));
            if (!item.labels.contains(item.anchor_id))
                throw InputError("item " + std::to_string(i) + ": anchor is not labelled");
            if (auto pit = ij.find("provenance"); pit != ij.end()) {
                const auto& pj = *pit;
                auto& p = item.provenance;
                p.anchor_id = pj.at("anchor_sampling").at("anchor_id").get<std::string>();
                p.item_seed = pj.at("anchor_sampling").at("item_seed").get<std::uint64_t>();
                p.attempt = pj.at("anchor_sampling").at("attempt").get<int>();
                p.anchor_candidates = pj.at("candidate_expansion").get<std::vector<std::string>>();
                p.question = pj.at("question_generation").at("question").get<std::string>();
                p.question_candidates = pj.at("candidate_reexpansion").get<std::vector<std::string>>();
                p.labels = labels_from(pj.at("chunk_labelling"));
            }
            b.items.push_back(std::move(item));
        }
        if (auto sit = j.find("skipped"); sit != j.end())
            for (const auto& s : *sit) b.skipped.push_back({s.at("index").get<std::size_t>(), s.at("reason").get<std::string>()});
        if (auto wit = j.find("warnings"); wit != j.end()) b.warnings = wit->get<std::vector<std::string>>();
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed benchmark file: ") + e.what());
    }
}

}  // namespace mhrag::benchgen
