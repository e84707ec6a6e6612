#include "mhrag/retrieval/providers.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/simd/kernels.hpp"
#include "mhrag/text.hpp"

#include <cmath>
#include <set>

namespace mhrag::retrieval {

namespace {

// FNV-1a low bits barely change between short tokens; spread them first.
std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

}  // namespace

std::vector<float> HashEmbedder::embed(std::string_view text) const {
    std::vector<float> v(dim_, 0.0f);
    for (const auto& tok : text::tokenize(text)) v[mix64(text::fnv1a64(tok)) % dim_] += 1.0f;
    simd::normalize(v);
    return v;
}

LookupEmbedder::LookupEmbedder(std::size_t dim, std::map<std::string, std::vector<float>> table, bool strict)
    : dim_(dim), strict_(strict), fallback_(dim) {
    for (auto& [text, vec] : table) {
        if (vec.size() != dim_) throw InputError("lookup embedding for '" + text + "' has wrong dimension");
        if (simd::normalize(vec) == 0.0f) throw InputError("lookup embedding for '" + text + "' is zero");
        table_.emplace(text, std::move(vec));
    }
}

LookupEmbedder LookupEmbedder::from_file(const std::filesystem::path& path) {
    auto doc = jsonl::Json::parse(jsonl::read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("dimension") || !doc.contains("vectors"))
        throw InputError(path.string() + ": expected {dimension, vectors}");
    std::map<std::string, std::vector<float>> table;
    try {
        for (auto& [k, v] : doc["vectors"].items()) table.emplace(k, v.get<std::vector<float>>());
        return LookupEmbedder(doc["dimension"].get<std::size_t>(), std::move(table), doc.value("strict", false));
    } catch (const jsonl::Json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::vector<float> LookupEmbedder::embed(std::string_view text) const {
    if (auto it = table_.find(text); it != table_.end()) return it->second;
    if (strict_) throw ProviderError("lookup embedder has no vector for text");
    return fallback_.embed(text);
}

std::vector<float> SerializingEmbedder::embed(std::string_view text) const {
    std::lock_guard lock(mu_);
    return inner_->embed(text);
}

double TokenOverlapReranker::score(std::string_view query_en, std::string_view chunk_text) const {
    auto q = text::tokenize(query_en);
    auto p = text::tokenize(chunk_text);
    std::set<std::string> qs(q.begin(), q.end());
    std::set<std::string> ps(p.begin(), p.end());
    if (ps.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : qs) common += ps.count(t);
    return static_cast<double>(common) / std::sqrt(static_cast<double>(ps.size()));
}

}  // namespace mhrag::retrieval
