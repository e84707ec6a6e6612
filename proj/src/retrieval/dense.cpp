#include "mhrag/retrieval/dense.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/simd/kernels.hpp"

namespace mhrag::retrieval {

DenseIndex::DenseIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> rows, std::string provider,
                       std::string corpus_digest)
    : dim_(dim), ids_(std::move(ids)), rows_(std::move(rows)), provider_(std::move(provider)),
      corpus_digest_(std::move(corpus_digest)) {
    if (dim_ == 0) throw InputError("dense index dimension must be positive");
    if (rows_.size() != ids_.size() * dim_) throw InputError("dense index row storage does not match ids");
}

std::vector<float> DenseIndex::scores(std::span<const float> query) const {
    std::vector<float> out(ids_.size());
    simd::inner_products(rows_, dim_, query, out);
    return out;
}

DenseIndex build_dense_index(const corpus::ChunkStore& store, const EmbeddingProvider& provider) {
    if (store.empty()) throw InputError("cannot build a dense index over an empty corpus");
    const std::size_t dim = provider.dimension();
    std::vector<std::string> ids;
    std::vector<float> rows;
    ids.reserve(store.size());
    rows.reserve(store.size() * dim);
    for (const auto& chunk : store) {
        auto v = provider.embed(chunk.text);
        if (v.size() != dim) throw InputError("embedding provider returned wrong dimension for " + chunk.id);
        ids.push_back(chunk.id);
        rows.insert(rows.end(), v.begin(), v.end());
    }
    return DenseIndex(dim, std::move(ids), std::move(rows), provider.name(), corpus::digest(store));
}

ScoredList dense_retrieve_vector(const DenseIndex& index, std::span<const float> query_vec, std::size_t k,
                                 const RowFilter& filter) {
    if (query_vec.size() != index.dimension())
        throw InputError("query dimension " + std::to_string(query_vec.size()) + " does not match index dimension " +
                         std::to_string(index.dimension()));
    auto sims = index.scores(query_vec);
    std::vector<ScoredEntry> entries;
    entries.reserve(sims.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
        if (filter && !filter(i)) continue;
        entries.push_back({index.ids()[i], static_cast<double>(sims[i])});
    }
    return ScoredList::from_unsorted(std::move(entries)).truncated(k);
}

ScoredList dense_retrieve(const DenseIndex& index, std::string_view query, std::size_t k,
                          const EmbeddingProvider& provider, const RowFilter& filter) {
    if (provider.dimension() != index.dimension())
        throw InputError("provider dimension " + std::to_string(provider.dimension()) +
                         " does not match index dimension " + std::to_string(index.dimension()));
    auto q = provider.embed(query);
    return dense_retrieve_vector(index, q, k, filter);
}

nlohmann::json DenseIndex::to_json() const {
    auto vectors = nlohmann::json::array();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        auto r = row(i);
        vectors.push_back(std::vector<float>(r.begin(), r.end()));
    }
    return {{"format", "mhrag-dense-index"}, {"version", 1},       {"corpus_digest", corpus_digest_},
            {"provider", provider_},         {"dimension", dim_}, {"ids", ids_},
            {"vectors", std::move(vectors)}};
}

DenseIndex DenseIndex::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "mhrag-dense-index") throw InputError("not a dense index snapshot");
        if (j.at("version") != 1) throw InputError("unsupported dense index version");
        auto dim = j.at("dimension").get<std::size_t>();
        auto ids = j.at("ids").get<std::vector<std::string>>();
        std::vector<float> rows;
        rows.reserve(ids.size() * dim);
        for (const auto& v : j.at("vectors")) {
            auto vec = v.get<std::vector<float>>();
            if (vec.size() != dim) throw InputError("dense snapshot row has wrong dimension");
            rows.insert(rows.end(), vec.begin(), vec.end());
        }
        return DenseIndex(dim, std::move(ids), std::move(rows), j.at("provider").get<std::string>(),
                          j.at("corpus_digest").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed dense index snapshot: ") + e.what());
    }
}

}  // namespace mhrag::retrieval
