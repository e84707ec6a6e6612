#include "mhrag/retrieval/fusion.hpp"

#include "mhrag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace mhrag::retrieval {

ScoredList rrf_fuse(std::span<const ScoredList> lists, std::size_t k_rrf) {
    std::unordered_map<std::string, double> fused;
    for (const auto& list : lists) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            const double rank = static_cast<double>(i + 1);
            fused[list[i].chunk_id] += 1.0 / (rank + static_cast<double>(k_rrf));
        }
    }
    std::vector<ScoredEntry> entries;
    entries.reserve(fused.size());
    for (auto& [id, score] : fused) entries.push_back({id, score});
    return ScoredList::from_unsorted(std::move(entries));
}

std::vector<ScoredEntry> deduplicate(const std::vector<ScoredEntry>& entries) {
    std::unordered_set<std::string> seen;
    std::vector<ScoredEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        if (seen.insert(e.chunk_id).second) out.push_back(e);
    return out;
}

ScoredList rerank(const RerankScorer& scorer, std::string_view query_en, const ScoredList& candidates,
                  std::size_t k_rerank, const corpus::ChunkStore& store) {
    if (candidates.empty()) throw InputError("rerank: no candidates");
    std::vector<ScoredEntry> rescored;
    rescored.reserve(candidates.size());
    for (const auto& c : candidates) {
        auto pos = store.position(c.chunk_id);
        if (!pos) throw InputError("rerank: unknown chunk " + c.chunk_id);
        double s;
        try {
            s = scorer.score(query_en, store.at(*pos).text);
        } catch (const std::exception& e) {
            throw ProviderError(std::string("reranker failed: ") + e.what());
        }
        if (!std::isfinite(s)) throw ProviderError("reranker returned a non-finite score");
        rescored.push_back({c.chunk_id, s});
    }
    std::stable_sort(rescored.begin(), rescored.end(),
                     [](const ScoredEntry& a, const ScoredEntry& b) { return a.score > b.score; });
    if (rescored.size() > k_rerank) rescored.resize(k_rerank);
    return ScoredList::from_ordered(std::move(rescored));
}

}  // namespace mhrag::retrieval
