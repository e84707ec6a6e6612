#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace mhrag::retrieval {

/// Sentence embedder. Outputs have constant dimension and unit L2 norm
/// (text with no tokens may embed to the zero vector).
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<float> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
    virtual bool deterministic() const { return true; }
    virtual bool concurrency_safe() const { return true; }
};

/// Joint query-passage relevance scorer (cross-encoder slot).
class RerankScorer {
public:
    virtual ~RerankScorer() = default;
    virtual double score(std::string_view query_en, std::string_view chunk_text) const = 0;
    virtual std::string name() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Token-hash bag of words: each token adds 1 to bucket mix(fnv1a(token)) % dim,
/// then the vector is L2-normalised.
class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dim = 512) : dim_(dim) {}
    std::vector<float> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "hash-" + std::to_string(dim_); }

private:
    std::size_t dim_;
};

/// Fixed text -> vector table (normalised on construction). Unknown text
/// falls back to a HashEmbedder of the same dimension, or throws
/// ProviderError when `strict`.
class LookupEmbedder final : public EmbeddingProvider {
public:
    LookupEmbedder(std::size_t dim, std::map<std::string, std::vector<float>> table, bool strict = false);
    /// JSON: {"dimension": d, "strict": bool, "vectors": {"text": [..]}}
    static LookupEmbedder from_file(const std::filesystem::path& path);

    std::vector<float> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "lookup-" + std::to_string(dim_); }

private:
    std::size_t dim_;
    std::map<std::string, std::vector<float>, std::less<>> table_;
    bool strict_;
    HashEmbedder fallback_;
};

/// Wraps a provider that is not safe for concurrent calls.
class SerializingEmbedder final : public EmbeddingProvider {
public:
    explicit SerializingEmbedder(std::shared_ptr<const EmbeddingProvider> inner) : inner_(std::move(inner)) {}
    std::vector<float> embed(std::string_view text) const override;
    std::size_t dimension() const override { return inner_->dimension(); }
    std::string name() const override { return inner_->name(); }
    bool deterministic() const override { return inner_->deterministic(); }

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    mutable std::mutex mu_;
};

/// Query-term overlap normalised by passage length: |Q ∩ P| / sqrt(|P|) over
/// token sets.
class TokenOverlapReranker final : public RerankScorer {
public:
    double score(std::string_view query_en, std::string_view chunk_text) const override;
    std::string name() const override { return "token-overlap"; }
};

class FunctionReranker final : public RerankScorer {
public:
    using Fn = std::function<double(std::string_view, std::string_view)>;
    explicit FunctionReranker(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
    double score(std::string_view q, std::string_view p) const override { return fn_(q, p); }
    std::string name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

}  // namespace mhrag::retrieval
