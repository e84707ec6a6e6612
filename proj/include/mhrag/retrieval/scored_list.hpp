#pragma once

#include <string>
#include <vector>

namespace mhrag::retrieval {

struct ScoredEntry {
    std::string chunk_id;
    double score = 0.0;

    friend bool operator==(const ScoredEntry&, const ScoredEntry&) = default;
};

/// Canonical order: score descending, ties by chunk_id ascending.
bool canonical_less(const ScoredEntry& a, const ScoredEntry& b);

/// Ordered (chunk_id, score) list shared by every retrieval stage. No chunk
/// id appears twice.
class ScoredList {
public:
    ScoredList() = default;

    /// Sorts into canonical order. Throws InputError on duplicate ids.
    static ScoredList from_unsorted(std::vector<ScoredEntry> entries);

    /// Adopts entries whose order is already decided by the caller (e.g. a
    /// reranker's stable order). Throws InputError on duplicate ids or
    /// ascending scores.
    static ScoredList from_ordered(std::vector<ScoredEntry> entries);

    const std::vector<ScoredEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const ScoredEntry& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::vector<std::string> ids() const;
    ScoredList truncated(std::size_t k) const;

    friend bool operator==(const ScoredList&, const ScoredList&) = default;

private:
    std::vector<ScoredEntry> entries_;
};

/// Shared validator: unique ids, non-increasing scores, and (when
/// `require_id_ties` is set) equal scores ordered by chunk_id.
bool is_well_ordered(const std::vector<ScoredEntry>& entries, bool require_id_ties = true);

}  // namespace mhrag::retrieval
