#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/providers.hpp"
#include "mhrag/retrieval/scored_list.hpp"

#include <span>
#include <vector>

namespace mhrag::retrieval {

/// Reciprocal rank fusion: score(c) = sum over lists containing c of
/// 1 / (rank + k_rrf), rank 1-based. Output in canonical order.
ScoredList rrf_fuse(std::span<const ScoredList> lists, std::size_t k_rrf = 60);

/// Keeps the first occurrence of each chunk id; order otherwise preserved.
std::vector<ScoredEntry> deduplicate(const std::vector<ScoredEntry>& entries);

/// Rescores candidates with the reranker and returns the top k_rerank by
/// the new score. Equal scores keep their input order. Throws ProviderError
/// if the scorer throws or returns a non-finite value, InputError if a
/// candidate is missing from the store or the candidate list is empty.
ScoredList rerank(const RerankScorer& scorer, std::string_view query_en, const ScoredList& candidates,
                  std::size_t k_rerank, const corpus::ChunkStore& store);

}  // namespace mhrag::retrieval
