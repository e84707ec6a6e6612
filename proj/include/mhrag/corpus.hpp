#pragma once

#include "mhrag/lang.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace mhrag::corpus {

/// One guideline passage; the unit of indexing, retrieval and labelling.
struct Chunk {
    std::string id;
    std::string text;
    std::string source_doc;
    lang::LanguageTag language = lang::LanguageTag::En;
    std::optional<std::string> section_title;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Immutable after construction; safe to share across threads.
class ChunkStore {
public:
    ChunkStore() = default;
    /// Throws InputError on duplicate ids or blank text.
    explicit ChunkStore(std::vector<Chunk> chunks);

    std::size_t size() const { return chunks_.size(); }
    bool empty() const { return chunks_.empty(); }
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk& at(std::size_t pos) const { return chunks_.at(pos); }
    std::optional<std::size_t> position(const std::string& id) const;

    auto begin() const { return chunks_.begin(); }
    auto end() const { return chunks_.end(); }

    friend bool operator==(const ChunkStore& a, const ChunkStore& b) { return a.chunks_ == b.chunks_; }

private:
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline const std::set<lang::LanguageTag> kDefaultLanguages = {lang::LanguageTag::En, lang::LanguageTag::Hi,
                                                               lang::LanguageTag::As};

/// Reads a JSONL corpus. Errors carry the offending line number.
ChunkStore load_corpus(std::istream& in, const std::string& source,
                       const std::set<lang::LanguageTag>& languages = kDefaultLanguages);
ChunkStore load_corpus(const std::filesystem::path& path,
                       const std::set<lang::LanguageTag>& languages = kDefaultLanguages);

std::optional<Chunk> get_chunk(const ChunkStore& store, const std::string& id);

/// JSONL serialization, one record per chunk in store order.
std::string to_jsonl(const ChunkStore& store);

/// Digest of the serialized store; identifies a corpus in snapshots and benchmarks.
std::string digest(const ChunkStore& store);

}  // namespace mhrag::corpus
