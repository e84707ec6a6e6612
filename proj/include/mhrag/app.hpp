#pragma once

#include "mhrag/corpus.hpp"
#include "mhrag/lang.hpp"
#include "mhrag/pipeline.hpp"
#include "mhrag/retrieval/bm25.hpp"
#include "mhrag/retrieval/dense.hpp"
#include "mhrag/stage.hpp"
#include "mhrag/triage.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mhrag::app {

/// One configurable field: name, default value (its JSON type is the
/// field's type) and a one-line description.
struct ConfigField {
    std::string name;
    nlohmann::json default_value;
    std::string help;
    bool is_path = false;
};

/// Every RunConfig field in display order.
const std::vector<ConfigField>& config_fields();

struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path index_dir;
    std::filesystem::path stage_patterns;
    std::filesystem::path triage_rules;
    std::filesystem::path crisis_keywords;
    std::filesystem::path symptom_bank;
    std::filesystem::path templates;
    std::filesystem::path prompt;
    std::filesystem::path translations;
    std::filesystem::path embedder_vectors;

    retrieval::RetrievalConfig retrieval;
    double tau_now = 0.50;
    double tau_sd = 0.30;
    pipeline::GenerationPolicy generation;

    std::string embedder = "hash";
    std::size_t embedder_dim = 512;
    std::string reranker = "token-overlap";
    std::string generator = "extractive";
    std::string translator = "lookup";

    std::uint64_t seed = 42;
    bool same_day_addendum = false;
    bool trace_timing = false;
    std::size_t jobs = 1;

    nlohmann::json to_json() const;
};

/// Layers, lowest first: built-in defaults, the config file (relative paths
/// resolve against the file's directory), then `overrides` (relative paths
/// resolve against the working directory). Unknown keys and wrong types
/// are InputErrors; a missing config file is a MissingArtifactError.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& overrides = {});

/// Converts a flag string into the JSON type of the field's default.
nlohmann::json parse_field_value(const ConfigField& field, const std::string& text);

struct IndexManifest {
    std::string corpus_digest;
    std::string sparse_digest;
    std::string dense_digest;
    std::string embedder;

    nlohmann::json to_json() const;
    static IndexManifest from_json(const nlohmann::json& j);
    friend bool operator==(const IndexManifest&, const IndexManifest&) = default;
};

/// Loaded packs, providers and (once built or loaded) indexes for one config.
class Runtime {
public:
    explicit Runtime(RunConfig cfg);

    const RunConfig& config() const { return cfg_; }
    const corpus::ChunkStore& store() const { return store_; }
    const stage::PatternPack& patterns() const { return patterns_; }
    const triage::TriageEngine& triage_engine() const { return triage_; }
    const retrieval::EmbeddingProvider& embedder() const { return *embedder_; }
    const retrieval::RerankScorer* reranker() const { return reranker_.get(); }
    const lang::TranslatorProvider& translator() const { return *translator_; }

    void build_indexes();
    /// Reads the snapshots from index_dir. MissingArtifactError when absent;
    /// InputError when they were built from a different corpus or embedder.
    void load_indexes();
    bool has_indexes() const { return sparse_.has_value() && dense_.has_value(); }
    const retrieval::SparseIndex& sparse() const;
    const retrieval::DenseIndex& dense() const;

    /// Writes sparse.json, dense.json and manifest.json. Returns false (and
    /// writes nothing) when the manifest on disk already matches.
    bool write_indexes(IndexManifest* manifest_out = nullptr) const;
    IndexManifest manifest() const;

    /// With stage_filter set, retrieval keeps chunks whose text matches the
    /// query stage's cues, plus chunks that match no stage cue at all.
    retrieval::RetrievalContext retrieval_context() const;
    /// `generator` replaces the configured generator when set.
    pipeline::Pipeline make_pipeline(std::optional<LifeStage> stage_override = std::nullopt,
                                     std::shared_ptr<const pipeline::GeneratorProvider> generator = nullptr) const;

private:
    RunConfig cfg_;
    corpus::ChunkStore store_;
    stage::PatternPack patterns_;
    triage::TriageEngine triage_;
    pipeline::TemplatePack templates_;
    pipeline::PromptTemplate prompt_;
    std::shared_ptr<const retrieval::EmbeddingProvider> embedder_;
    std::unique_ptr<retrieval::RerankScorer> reranker_;
    std::shared_ptr<const lang::TranslatorProvider> translator_;
    std::shared_ptr<const pipeline::GeneratorProvider> generator_;
    std::shared_ptr<const std::unordered_map<std::string, unsigned>> chunk_stages_;
    std::optional<retrieval::SparseIndex> sparse_;
    std::optional<retrieval::DenseIndex> dense_;
};

/// Default location of the shipped data packs.
std::filesystem::path default_data_dir();

}  // namespace mhrag::app
