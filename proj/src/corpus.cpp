#include "mhrag/corpus.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/text.hpp"

#include <fstream>

namespace mhrag::corpus {

namespace {

bool is_blank(std::string_view s) {
    for (const auto& cp : text::decode_utf8(s)) {
        char32_t v = cp.value;
        bool space = v == ' ' || v == '\t' || v == '\n' || v == '\r' || v == '\v' || v == '\f' || v == 0xA0 ||
                     (v >= 0x2000 && v <= 0x200B) || v == 0x3000;
        if (!space) return false;
    }
    return true;
}

}  // namespace

ChunkStore::ChunkStore(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
    index_.reserve(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (is_blank(chunks_[i].text)) throw InputError("chunk '" + chunks_[i].id + "' has empty text");
        if (!index_.emplace(chunks_[i].id, i).second) throw InputError("duplicate chunk id '" + chunks_[i].id + "'");
    }
}

std::optional<std::size_t> ChunkStore::position(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

ChunkStore load_corpus(std::istream& in, const std::string& source, const std::set<lang::LanguageTag>& languages) {
    std::vector<Chunk> chunks;
    std::unordered_map<std::string, std::size_t> seen;  // id -> line
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        Chunk c;
        c.id = jsonl::require_string(rec, "id", source, line);
        if (c.id.empty()) throw ParseError(source, line, "empty chunk id");
        c.text = jsonl::require_string(rec, "text", source, line);
        if (!text::is_valid_utf8(c.text)) throw ParseError(source, line, "text of '" + c.id + "' is not valid UTF-8");
        if (is_blank(c.text)) throw ParseError(source, line, "empty text for chunk '" + c.id + "'");
        if (auto it = rec.find("source_doc"); it != rec.end() && it->is_string()) c.source_doc = it->get<std::string>();
        auto lang_str = jsonl::require_string(rec, "language", source, line);
        auto tag = lang::parse_language_tag(lang_str);
        if (!tag || !languages.contains(*tag))
            throw ParseError(source, line, "language '" + lang_str + "' not in the configured language set");
        c.language = *tag;
        if (auto it = rec.find("section_title"); it != rec.end() && it->is_string())
            c.section_title = it->get<std::string>();
        auto [pos, fresh] = seen.emplace(c.id, line);
        if (!fresh)
            throw ParseError(source, line,
                             "duplicate chunk id '" + c.id + "' (first seen on line " + std::to_string(pos->second) + ")");
        chunks.push_back(std::move(c));
    });
    return ChunkStore(std::move(chunks));
}

ChunkStore load_corpus(const std::filesystem::path& path, const std::set<lang::LanguageTag>& languages) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open corpus " + path.string());
    return load_corpus(in, path.string(), languages);
}

std::optional<Chunk> get_chunk(const ChunkStore& store, const std::string& id) {
    auto pos = store.position(id);
    if (!pos) return std::nullopt;
    return store.at(*pos);
}

std::string to_jsonl(const ChunkStore& store) {
    std::string out;
    for (const auto& c : store) {
        jsonl::Json rec = {{"id", c.id},
                           {"text", c.text},
                           {"source_doc", c.source_doc},
                           {"language", std::string(lang::to_string(c.language))}};
        if (c.section_title) rec["section_title"] = *c.section_title;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string digest(const ChunkStore& store) { return text::sha256_hex(to_jsonl(store)); }

}  // namespace mhrag::corpus
