#pragma once

#include <cstddef>

namespace mhrag::retrieval {

struct RetrievalConfig {
    std::size_t k_dense = 15;
    std::size_t k_rrf = 60;
    std::size_t k_rerank = 7;
    std::size_t top_k = 7;  // evidence chunks passed to generation
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    bool stage_filter = false;

    /// Throws InputError unless all counts are positive, top_k <= k_rerank,
    /// k1 > 0 and b in [0, 1].
    void validate() const;
};

}  // namespace mhrag::retrieval
