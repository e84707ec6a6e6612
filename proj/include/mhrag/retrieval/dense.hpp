#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/bm25.hpp"
#include "mhrag/retrieval/providers.hpp"
#include "mhrag/retrieval/scored_list.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace mhrag::retrieval {

/// Exact flat index of unit-norm chunk embeddings, stored row-major.
class DenseIndex {
public:
    DenseIndex() = default;
    DenseIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> rows, std::string provider,
               std::string corpus_digest);

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const float> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }
    std::span<const float> rows() const { return rows_; }
    const std::string& provider_name() const { return provider_; }
    const std::string& corpus_digest() const { return corpus_digest_; }

    /// Inner product of `query` with every row (SIMD-dispatched).
    std::vector<float> scores(std::span<const float> query) const;

    nlohmann::json to_json() const;
    static DenseIndex from_json(const nlohmann::json& j);

    friend bool operator==(const DenseIndex&, const DenseIndex&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> rows_;
    std::string provider_;
    std::string corpus_digest_;
};

/// Embeds every chunk. Throws InputError on an empty store or when the
/// provider returns a vector of the wrong size.
DenseIndex build_dense_index(const corpus::ChunkStore& store, const EmbeddingProvider& provider);

/// Top-k by cosine similarity over a flat scan. Throws InputError when the
/// provider dimension differs from the index.
ScoredList dense_retrieve(const DenseIndex& index, std::string_view query, std::size_t k,
                          const EmbeddingProvider& provider, const RowFilter& filter = {});

/// Same, for a precomputed query vector.
ScoredList dense_retrieve_vector(const DenseIndex& index, std::span<const float> query_vec, std::size_t k,
                                 const RowFilter& filter = {});

}  // namespace mhrag::retrieval
