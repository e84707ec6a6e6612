#include "mhrag/retrieval/bm25.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/text.hpp"

#include <cmath>

namespace mhrag::retrieval {

void RetrievalConfig::validate() const {
    if (k_dense == 0 || k_rrf == 0 || k_rerank == 0 || top_k == 0)
        throw InputError("retrieval depths must be positive");
    if (top_k > k_rerank) throw InputError("top_k must not exceed k_rerank");
    if (!(bm25_k1 > 0.0)) throw InputError("bm25_k1 must be positive");
    if (!(bm25_b >= 0.0 && bm25_b <= 1.0)) throw InputError("bm25_b must lie in [0, 1]");
}

std::size_t SparseIndex::df(const std::string& term) const {
    auto* p = find(term);
    return p ? p->size() : 0;
}

const std::vector<Posting>* SparseIndex::find(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

SparseIndex build_bm25_index(const corpus::ChunkStore& store, const RetrievalConfig& config) {
    if (store.empty()) throw InputError("cannot build a BM25 index over an empty corpus");
    config.validate();
    SparseIndex idx;
    idx.k1_ = config.bm25_k1;
    idx.b_ = config.bm25_b;
    idx.corpus_digest_ = corpus::digest(store);
    std::uint64_t total_len = 0;
    for (std::size_t pos = 0; pos < store.size(); ++pos) {
        const auto& chunk = store.at(pos);
        auto tokens = text::tokenize(chunk.text);
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) idx.postings_[term].push_back({static_cast<std::uint32_t>(pos), count});
        idx.doc_ids_.push_back(chunk.id);
        idx.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_len += tokens.size();
    }
    idx.avgdl_ = static_cast<double>(total_len) / static_cast<double>(store.size());
    return idx;
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
    double n = static_cast<double>(doc_count);
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

ScoredList bm25_retrieve(const SparseIndex& index, std::string_view query, std::size_t k, const RowFilter& filter) {
    std::vector<double> acc(index.doc_count(), 0.0);
    std::vector<bool> touched(index.doc_count(), false);
    const double avgdl = index.avg_doc_length() > 0.0 ? index.avg_doc_length() : 1.0;
    for (const auto& term : text::tokenize(query)) {
        const auto* postings = index.find(term);
        if (!postings) continue;
        const double idf = bm25_idf(index.doc_count(), postings->size());
        for (const auto& p : *postings) {
            const double tf = p.tf;
            const double len_norm = 1.0 - index.b() + index.b() * index.doc_lengths()[p.doc] / avgdl;
            acc[p.doc] += idf * tf * (index.k1() + 1.0) / (tf + index.k1() * len_norm);
            touched[p.doc] = true;
        }
    }
    std::vector<ScoredEntry> entries;
    for (std::size_t d = 0; d < acc.size(); ++d) {
        if (!touched[d] || acc[d] <= 0.0) continue;
        if (filter && !filter(d)) continue;
        entries.push_back({index.doc_ids()[d], acc[d]});
    }
    return ScoredList::from_unsorted(std::move(entries)).truncated(k);
}

nlohmann::json SparseIndex::to_json() const {
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, list] : postings_) {
        auto arr = nlohmann::json::array();
        for (const auto& p : list) arr.push_back({p.doc, p.tf});
        postings[term] = std::move(arr);
    }
    return {{"format", "mhrag-sparse-index"},
            {"version", 1},
            {"corpus_digest", corpus_digest_},
            {"config", {{"bm25_k1", k1_}, {"bm25_b", b_}}},
            {"doc_ids", doc_ids_},
            {"doc_lengths", doc_lengths_},
            {"postings", std::move(postings)}};
}

SparseIndex SparseIndex::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "mhrag-sparse-index") throw InputError("not a sparse index snapshot");
        if (j.at("version") != 1) throw InputError("unsupported sparse index version");
        SparseIndex idx;
        idx.corpus_digest_ = j.at("corpus_digest").get<std::string>();
        idx.k1_ = j.at("config").at("bm25_k1").get<double>();
        idx.b_ = j.at("config").at("bm25_b").get<double>();
        idx.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
        idx.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        if (idx.doc_ids_.size() != idx.doc_lengths_.size()) throw InputError("sparse snapshot length mismatch");
        std::uint64_t total = 0;
        for (auto l : idx.doc_lengths_) total += l;
        idx.avgdl_ = idx.doc_ids_.empty() ? 0.0 : static_cast<double>(total) / idx.doc_ids_.size();
        for (auto& [term, arr] : j.at("postings").items()) {
            auto& list = idx.postings_[term];
            for (const auto& p : arr) {
                Posting post{p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()};
                if (post.doc >= idx.doc_ids_.size()) throw InputError("posting references unknown document");
                list.push_back(post);
            }
        }
        return idx;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed sparse index snapshot: ") + e.what());
    }
}

}  // namespace mhrag::retrieval
