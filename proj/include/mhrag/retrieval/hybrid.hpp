#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/bm25.hpp"
#include "mhrag/retrieval/config.hpp"
#include "mhrag/retrieval/dense.hpp"
#include "mhrag/retrieval/fusion.hpp"
#include "mhrag/stage.hpp"
#include "mhrag/types.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mhrag::retrieval {

/// Optional metadata filter keyed on life stage. Only consulted when
/// RetrievalConfig::stage_filter is set.
using StageFilter = std::function<bool(const corpus::Chunk&, LifeStage)>;

/// Everything the hybrid stack reads. All pointees must outlive the call.
struct RetrievalContext {
    const corpus::ChunkStore* store = nullptr;
    const SparseIndex* sparse = nullptr;
    const DenseIndex* dense = nullptr;
    const EmbeddingProvider* embedder = nullptr;
    const RerankScorer* reranker = nullptr;  // null: keep fused order
    RetrievalConfig config;
    StageFilter stage_filter;
};

/// Every intermediate list plus which query text each stage consumed.
struct RetrievalTrace {
    std::string dense_query;
    std::string sparse_query;
    std::optional<std::string> rerank_query;
    ScoredList dense;
    ScoredList sparse;
    ScoredList fused;
    std::vector<ScoredEntry> deduplicated;
    std::optional<ScoredList> reranked;
    bool dense_failed = false;
    bool rerank_failed = false;
    bool rerank_skipped = false;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct RetrievalResult {
    ScoredList evidence;  // top_k
    RetrievalTrace trace;
};

/// dense(k_dense) + BM25(all non-zero) -> RRF(k_rrf) -> dedup ->
/// rerank(k_rerank) -> top_k. Dense and sparse consume the original query;
/// only the reranker sees `query_en`. A missing English view skips the
/// reranker; a failing embedder or reranker degrades to the remaining
/// stages and is recorded in the trace.
RetrievalResult retrieve_and_rerank(const std::string& query, const std::optional<std::string>& query_en,
                                    LifeStage stage, const stage::ConcernTags& concerns,
                                    const RetrievalContext& ctx);

nlohmann::json to_json(const ScoredList& list);

}  // namespace mhrag::retrieval
