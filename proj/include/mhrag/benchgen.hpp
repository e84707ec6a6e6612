#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/dense.hpp"
#include "mhrag/retrieval/scored_list.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mhrag::benchgen {

enum class EvidenceLabel { Direct, Related, Irrelevant };

std::string_view to_string(EvidenceLabel l);
std::optional<EvidenceLabel> parse_evidence_label(std::string_view s);

/// Outputs of the five construction steps for one item.
struct ItemProvenance {
    std::string anchor_id;
    std::uint64_t item_seed = 0;
    int attempt = 0;
    std::vector<std::string> anchor_candidates;    // dense expansion on the anchor
    std::string question;                          // generated question
    std::vector<std::string> question_candidates;  // dense re-expansion on the question
    std::map<std::string, EvidenceLabel> labels;   // every candidate, labelled
};

struct BenchmarkItem {
    std::string question;
    std::string anchor_id;
    std::map<std::string, EvidenceLabel> labels;
    ItemProvenance provenance;

    std::vector<std::string> direct_ids() const;
    std::size_t direct_count() const;
};

struct SkippedItem {
    std::size_t index;
    std::string reason;
};

struct Benchmark {
    static constexpr int kSchemaVersion = 1;
    std::string corpus_digest;
    std::uint64_t seed = 0;
    std::vector<BenchmarkItem> items;
    std::vector<SkippedItem> skipped;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static Benchmark from_json(const nlohmann::json& j);
};

class QuestionGenProvider {
public:
    virtual ~QuestionGenProvider() = default;
    /// `chunks[0]` is the anchor, followed by the expanded candidates.
    virtual std::string generate_question(const std::vector<const corpus::Chunk*>& chunks) const = 0;
    virtual bool deterministic() const { return true; }
};

class LabelerProvider {
public:
    virtual ~LabelerProvider() = default;
    virtual EvidenceLabel label(const std::string& question, const corpus::Chunk& chunk) const = 0;
    virtual bool deterministic() const { return true; }
};

/// Question from the anchor's most frequent content words that also occur
/// in other candidates.
class KeywordQuestionGenerator final : public QuestionGenProvider {
public:
    explicit KeywordQuestionGenerator(std::size_t n_terms = 2) : n_terms_(n_terms) {}
    std::string generate_question(const std::vector<const corpus::Chunk*>& chunks) const override;

private:
    std::size_t n_terms_;
};

/// DIRECT when the chunk contains every content word of the question,
/// RELATED when it contains some, IRRELEVANT otherwise.
class OverlapLabeler final : public LabelerProvider {
public:
    EvidenceLabel label(const std::string& question, const corpus::Chunk& chunk) const override;
};

/// Content words used by the doubles: tokens of length >= 3 outside a small
/// English function-word list.
std::vector<std::string> content_words(std::string_view text);

struct BuildOptions {
    std::size_t n_items = 10;
    std::uint64_t seed = 42;
    std::size_t k_dense = 15;
    int max_attempts = 3;
};

/// Retriever used for both expansion steps.
struct DenseRetriever {
    const retrieval::DenseIndex* index = nullptr;
    const retrieval::EmbeddingProvider* embedder = nullptr;
};

/// Five steps per item: seeded anchor sampling, dense expansion from the
/// anchor, question generation, dense re-expansion from the question,
/// labelling of the union. Items with fewer than two DIRECT labels are
/// dropped whole and retried with a fresh anchor, up to max_attempts.
/// Each item's RNG is seeded from (seed, item index, attempt) only.
Benchmark build_benchmark(const corpus::ChunkStore& store, const DenseRetriever& retriever,
                          const QuestionGenProvider& qgen, const LabelerProvider& labeler, const BuildOptions& opts);

struct BenchmarkStats {
    double mean_direct = 0.0;
    std::size_t min_direct = 0;
    std::size_t max_direct = 0;
    std::size_t n_items = 0;
};

/// Throws InputError on an empty benchmark.
BenchmarkStats benchmark_stats(const Benchmark& bench);

struct AuditReport {
    std::size_t audited = 0;
    std::size_t newly_direct = 0;
    std::size_t related = 0;
    std::size_t irrelevant = 0;

    double frac_newly_direct() const { return audited ? double(newly_direct) / audited : 0.0; }
    double frac_related() const { return audited ? double(related) / audited : 0.0; }
    double frac_irrelevant() const { return audited ? double(irrelevant) / audited : 0.0; }
    nlohmann::json to_json() const;
};

/// Re-labels each item's top-`depth` system chunks that were not DIRECT.
/// `rankings[i]` belongs to `bench.items[i]`.
AuditReport audit_gold(const Benchmark& bench, const std::vector<retrieval::ScoredList>& rankings,
                       const corpus::ChunkStore& store, const LabelerProvider& auditor, std::size_t depth);

}  // namespace mhrag::benchgen
