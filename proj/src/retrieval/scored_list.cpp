#include "mhrag/retrieval/scored_list.hpp"

#include "mhrag/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace mhrag::retrieval {

namespace {

void require_unique(const std::vector<ScoredEntry>& entries) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries)
        if (!seen.insert(e.chunk_id).second) throw InputError("duplicate chunk id in scored list: " + e.chunk_id);
}

}  // namespace

bool canonical_less(const ScoredEntry& a, const ScoredEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
}

ScoredList ScoredList::from_unsorted(std::vector<ScoredEntry> entries) {
    require_unique(entries);
    std::sort(entries.begin(), entries.end(), canonical_less);
    ScoredList out;
    out.entries_ = std::move(entries);
    return out;
}

ScoredList ScoredList::from_ordered(std::vector<ScoredEntry> entries) {
    if (!is_well_ordered(entries, false)) throw InputError("scored list is not in descending score order");
    ScoredList out;
    out.entries_ = std::move(entries);
    return out;
}

std::vector<std::string> ScoredList::ids() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.chunk_id);
    return out;
}

ScoredList ScoredList::truncated(std::size_t k) const {
    ScoredList out;
    out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(std::min(k, entries_.size())));
    return out;
}

bool is_well_ordered(const std::vector<ScoredEntry>& entries, bool require_id_ties) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!seen.insert(entries[i].chunk_id).second) return false;
        if (i == 0) continue;
        const auto& prev = entries[i - 1];
        const auto& cur = entries[i];
        if (cur.score > prev.score) return false;
        if (require_id_ties && cur.score == prev.score && cur.chunk_id < prev.chunk_id) return false;
    }
    return true;
}

}  // namespace mhrag::retrieval
