#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/config.hpp"
#include "mhrag/retrieval/scored_list.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace mhrag::retrieval {

/// Predicate over store positions; rejected chunks are never returned.
using RowFilter = std::function<bool(std::size_t)>;

inline constexpr std::size_t kAllResults = std::numeric_limits<std::size_t>::max();

struct Posting {
    std::uint32_t doc;  // store position
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Inverted index with the statistics BM25 needs. Immutable after build.
class SparseIndex {
public:
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    double avg_doc_length() const { return avgdl_; }
    std::size_t doc_count() const { return doc_ids_.size(); }
    double k1() const { return k1_; }
    double b() const { return b_; }
    const std::string& corpus_digest() const { return corpus_digest_; }

    /// Document frequency; 0 for unknown terms.
    std::size_t df(const std::string& term) const;
    const std::vector<Posting>* find(const std::string& term) const;

    nlohmann::json to_json() const;
    static SparseIndex from_json(const nlohmann::json& j);

    friend bool operator==(const SparseIndex&, const SparseIndex&) = default;

private:
    friend SparseIndex build_bm25_index(const corpus::ChunkStore&, const RetrievalConfig&);

    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avgdl_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
    std::string corpus_digest_;
};

/// Throws InputError on an empty store.
SparseIndex build_bm25_index(const corpus::ChunkStore& store, const RetrievalConfig& config);

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); always positive.
double bm25_idf(std::size_t doc_count, std::size_t df);

/// Top-k by BM25 summed over query tokens (repeated tokens count again).
/// Documents scoring zero are dropped; an empty or out-of-vocabulary query
/// yields an empty list.
ScoredList bm25_retrieve(const SparseIndex& index, std::string_view query, std::size_t k = kAllResults,
                         const RowFilter& filter = {});

}  // namespace mhrag::retrieval
