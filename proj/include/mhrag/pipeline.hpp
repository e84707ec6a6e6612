#pragma once

#include "mhrag/lang.hpp"
#include "mhrag/retrieval/hybrid.hpp"
#include "mhrag/stage.hpp"
#include "mhrag/triage.hpp"
#include "mhrag/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mhrag::pipeline {

/// Trims, collapses whitespace runs to one space and drops control
/// characters. Throws InputError("empty query") if nothing is left.
std::string normalize(std::string_view raw);

struct QueryEnvelope {
    std::string raw;
    std::string normalized;
    lang::LanguageTag lang = lang::LanguageTag::En;
    std::optional<std::string> english;  // absent when translation failed
    stage::PlatformMetadata meta;
    LifeStage stage = LifeStage::MaternalPregnant;
    stage::ConcernTags concerns;
};

/// One pipeline step in the trace.
struct TraceStep {
    std::string name;
    std::string input_digest;
    std::string output_digest;
    nlohmann::json detail;
    std::optional<std::int64_t> elapsed_us;
};

class Trace {
public:
    explicit Trace(bool record_timing = false) : timing_(record_timing) {}

    void add(std::string name, std::string_view input, std::string_view output, nlohmann::json detail = {},
             std::optional<std::chrono::microseconds> elapsed = std::nullopt);
    void flag(const std::string& f);

    bool has_step(std::string_view name) const;
    const TraceStep* step(std::string_view name) const;
    const std::vector<TraceStep>& steps() const { return steps_; }
    const std::vector<std::string>& flags() const { return flags_; }
    bool has_flag(std::string_view f) const;
    bool timing() const { return timing_; }

    nlohmann::json to_json() const;

private:
    bool timing_;
    std::vector<TraceStep> steps_;
    std::vector<std::string> flags_;
};

enum class ResponseKind { Template, Informational };

struct FinalResponse {
    std::string text;
    ResponseKind kind = ResponseKind::Template;
    TemplateId label = TemplateId::Pass;
    std::vector<std::string> sources;  // empty for templates
    Trace trace;

    /// {text, kind, label, sources, trace_ref}; trace_ref is the trace digest.
    nlohmann::json envelope() const;
};

/// Per-(template, language) response texts with English fallback.
class TemplatePack {
public:
    /// JSONL {template, lang, text}.
    static TemplatePack load(const std::filesystem::path& path);
    static TemplatePack load(std::istream& in, const std::string& source);
    void add(TemplateId t, lang::LanguageTag l, std::string text);

    /// Localised text, else English with `fell_back` set. Throws
    /// MissingArtifactError when neither exists.
    const std::string& text(TemplateId t, lang::LanguageTag l, bool& fell_back) const;

private:
    std::map<std::pair<TemplateId, lang::LanguageTag>, std::string> texts_;
};

/// Template response for an escalation. Sources are always empty. Throws
/// InputError for PASS (not a template) or an unknown id string.
FinalResponse render_template(TemplateId t, const QueryEnvelope& env, const TemplatePack& pack);
FinalResponse render_template(std::string_view template_id, const QueryEnvelope& env, const TemplatePack& pack);

struct ParsedGeneration {
    TemplateId label = TemplateId::Pass;
    std::string body;
    bool malformed = false;
};

/// Label-first contract: the first line, whitespace-trimmed, must be one of
/// the five labels (case-sensitive). Otherwise PASS with `malformed` set and
/// the full text as body.
ParsedGeneration parse_leading_label(std::string_view raw_generation);

/// Ids cited as "[id]" in `body` that belong to `evidence`, in order of first
/// citation. Citations of anything else are dropped.
std::vector<std::string> cited_chunk_ids(std::string_view body, const std::vector<std::string>& evidence);

struct EvidenceChunk {
    std::string id;
    std::string text;
};

struct PromptParts {
    std::string system;
    std::vector<EvidenceChunk> context;
    std::string question;
};

/// Prompt skeleton read from a data file. The file holds the system rules,
/// then a line "---", then the body with {context} and {question}.
class PromptTemplate {
public:
    static PromptTemplate load(const std::filesystem::path& path);
    static PromptTemplate parse(std::string_view content);

    const std::string& system() const { return system_; }
    std::string render_context(const std::vector<EvidenceChunk>& context) const;
    std::string assemble(const PromptParts& parts) const;

private:
    std::string system_;
    std::string body_;
};

class GeneratorProvider {
public:
    virtual ~GeneratorProvider() = default;
    virtual std::string generate(const PromptParts& parts, const std::string& full_prompt) const = 0;
    virtual std::string name() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Returns "PASS" then one cited sentence per evidence chunk.
class ExtractiveGenerator final : public GeneratorProvider {
public:
    std::string generate(const PromptParts& parts, const std::string& full_prompt) const override;
    std::string name() const override { return "extractive"; }
};

/// Canned output for every call; useful for driving the post-check.
class ScriptedGenerator final : public GeneratorProvider {
public:
    explicit ScriptedGenerator(std::string output) : output_(std::move(output)) {}
    std::string generate(const PromptParts&, const std::string&) const override { return output_; }
    std::string name() const override { return "scripted"; }

private:
    std::string output_;
};

struct GenerationPolicy {
    double temperature = 0.1;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60'000};
};

struct PipelineConfig {
    retrieval::RetrievalConfig retrieval;
    GenerationPolicy generation;
    bool same_day_addendum = false;
    bool trace_timing = false;
    std::optional<LifeStage> stage_override;
};

/// Shared, immutable resources. Pointees must outlive the Pipeline.
struct PipelineResources {
    const stage::PatternPack* patterns = nullptr;
    const triage::TriageEngine* triage = nullptr;
    const TemplatePack* templates = nullptr;
    const PromptTemplate* prompt = nullptr;
    retrieval::RetrievalContext retrieval;
    std::shared_ptr<const lang::TranslatorProvider> translator;
    std::shared_ptr<const GeneratorProvider> generator;
};

/// End-to-end orchestration. Reentrant: each call keeps its state in the
/// envelope and trace.
class Pipeline {
public:
    Pipeline(PipelineResources res, PipelineConfig config);

    /// Normalise, detect language, English view, stage, concerns.
    QueryEnvelope prepare(std::string_view raw_query, const stage::PlatformMetadata& meta, Trace& trace) const;

    /// Triage first; escalations return a template with no retrieval or
    /// generation. PASS goes through hybrid retrieval, generation and the
    /// label post-check, which swaps in the template for any escalation label.
    /// Throws ProviderError when generation fails after all retries.
    FinalResponse run(std::string_view raw_query, const stage::PlatformMetadata& meta = {}) const;

    const PipelineConfig& config() const { return config_; }

private:
    std::string call_generator(const PromptParts& parts, const std::string& prompt, Trace& trace) const;

    PipelineResources res_;
    PipelineConfig config_;
};

}  // namespace mhrag::pipeline
