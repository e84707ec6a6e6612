#include "mhrag/retrieval/hybrid.hpp"

#include "mhrag/errors.hpp"

#include <array>

namespace mhrag::retrieval {

nlohmann::json to_json(const ScoredList& list) {
    auto arr = nlohmann::json::array();
    for (const auto& e : list) arr.push_back({{"id", e.chunk_id}, {"score", e.score}});
    return arr;
}

nlohmann::json RetrievalTrace::to_json() const {
    nlohmann::json j = {{"dense_query", dense_query},
                        {"sparse_query", sparse_query},
                        {"rerank_query", rerank_query ? nlohmann::json(*rerank_query) : nlohmann::json(nullptr)},
                        {"dense", retrieval::to_json(dense)},
                        {"sparse", retrieval::to_json(sparse)},
                        {"fused", retrieval::to_json(fused)},
                        {"dense_failed", dense_failed},
                        {"rerank_failed", rerank_failed},
                        {"rerank_skipped", rerank_skipped},
                        {"warnings", warnings}};
    if (reranked) j["reranked"] = retrieval::to_json(*reranked);
    return j;
}

RetrievalResult retrieve_and_rerank(const std::string& query, const std::optional<std::string>& query_en,
                                    LifeStage stage, const stage::ConcernTags& /*concerns*/,
                                    const RetrievalContext& ctx) {
    if (!ctx.store || !ctx.sparse || !ctx.dense || !ctx.embedder)
        throw MissingArtifactError("retrieval context is missing an index or the embedder");
    ctx.config.validate();

    RowFilter filter;
    if (ctx.config.stage_filter && ctx.stage_filter) {
        filter = [&](std::size_t pos) { return ctx.stage_filter(ctx.store->at(pos), stage); };
    }

    RetrievalResult result;
    auto& trace = result.trace;
    trace.dense_query = query;
    trace.sparse_query = query;

    try {
        trace.dense = dense_retrieve(*ctx.dense, query, ctx.config.k_dense, *ctx.embedder, filter);
    } catch (const ProviderError& e) {
        trace.dense_failed = true;
        trace.warnings.push_back(std::string("dense retrieval unavailable: ") + e.what());
    }
    trace.sparse = bm25_retrieve(*ctx.sparse, query, kAllResults, filter);

    std::array<ScoredList, 2> lists{trace.dense, trace.sparse};
    trace.fused = rrf_fuse(lists, ctx.config.k_rrf);
    trace.deduplicated = deduplicate(trace.fused.entries());
    auto pool = ScoredList::from_ordered(trace.deduplicated);

    ScoredList ranked;
    if (pool.empty()) {
        ranked = pool;
    } else if (!ctx.reranker) {
        ranked = pool.truncated(ctx.config.k_rerank);
    } else if (!query_en) {
        trace.rerank_skipped = true;
        trace.warnings.push_back("no English view; reranking skipped");
        ranked = pool.truncated(ctx.config.k_rerank);
    } else {
        trace.rerank_query = *query_en;
        try {
            trace.reranked = rerank(*ctx.reranker, *query_en, pool, ctx.config.k_rerank, *ctx.store);
            ranked = *trace.reranked;
        } catch (const ProviderError& e) {
            trace.rerank_failed = true;
            trace.warnings.push_back(std::string("reranker failed, using fused order: ") + e.what());
            ranked = pool.truncated(ctx.config.k_rerank);
        }
    }
    result.evidence = ranked.truncated(ctx.config.top_k);
    return result;
}

}  // namespace mhrag::retrieval
