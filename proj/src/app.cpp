#include "mhrag/app.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/regex_util.hpp"
#include "mhrag/text.hpp"

#include <cstdlib>
#include <fstream>

#ifndef MHRAG_DEFAULT_DATA_DIR
#define MHRAG_DEFAULT_DATA_DIR "data"
#endif

namespace mhrag::app {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path default_data_dir() {
    if (const char* env = std::getenv("MHRAG_DATA_DIR"); env && *env) return env;
    return MHRAG_DEFAULT_DATA_DIR;
}

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        {"corpus", "corpus.jsonl", "chunk corpus (JSONL)", true},
        {"index_dir", "index", "directory for index snapshots", true},
        {"stage_patterns", "stage_patterns.jsonl", "stage pattern and concern keyword pack", true},
        {"triage_rules", "triage_rules.jsonl", "trigger rule pack", true},
        {"crisis_keywords", "crisis_keywords.jsonl", "crisis subtype keyword pack", true},
        {"symptom_bank", "symptom_bank.jsonl", "canonical emergency symptom bank", true},
        {"templates", "templates.jsonl", "response template pack", true},
        {"prompt", "prompt.txt", "generation prompt skeleton", true},
        {"translations", "translations.json", "lookup translator table", true},
        {"embedder_vectors", "", "vector table for the lookup embedder", true},
        {"k_dense", 15, "dense candidates", false},
        {"k_rrf", 60, "RRF rank constant", false},
        {"k_rerank", 7, "candidates kept after reranking", false},
        {"top_k", 7, "evidence chunks passed to generation (K)", false},
        {"bm25_k1", 1.2, "BM25 term-frequency saturation", false},
        {"bm25_b", 0.75, "BM25 length normalisation", false},
        {"stage_filter", false, "restrict retrieval by life stage", false},
        {"tau_now", 0.50, "semantic threshold for EMERGENCY_NOW", false},
        {"tau_sd", 0.30, "semantic threshold for SAME_DAY", false},
        {"temperature", 0.1, "generation temperature", false},
        {"max_retries", 3, "generation retries after the first attempt", false},
        {"timeout_s", 60.0, "generation timeout per attempt, seconds", false},
        {"embedder", "hash", "embedding provider: hash | lookup", false},
        {"embedder_dim", 512, "hash embedder dimension", false},
        {"reranker", "token-overlap", "reranker: token-overlap | none", false},
        {"generator", "extractive", "generator: extractive", false},
        {"translator", "lookup", "translator: lookup | none", false},
        {"seed", 42, "random seed", false},
        {"same_day_addendum", false, "append one evidence sentence to SAME-DAY templates", false},
        {"trace_timing", false, "record per-step timings in traces", false},
        {"jobs", 1, "worker threads for batch evaluation", false},
    };
    return fields;
}

namespace {

const ConfigField* find_field(const std::string& name) {
    for (const auto& f : config_fields())
        if (f.name == name) return &f;
    return nullptr;
}

void check_type(const ConfigField& f, const json& v) {
    const auto& d = f.default_value;
    bool ok = (d.is_string() && v.is_string()) || (d.is_boolean() && v.is_boolean()) ||
              (d.is_number_integer() && v.is_number_integer() && v.get<std::int64_t>() >= 0) ||
              (d.is_number_float() && v.is_number());
    if (!ok) throw InputError("config field '" + f.name + "' has the wrong type: " + v.dump());
}

void apply_layer(json& merged, const json& layer, const fs::path& base) {
    if (layer.is_null()) return;
    if (!layer.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [k, v] : layer.items()) {
        const auto* f = find_field(k);
        if (!f) throw InputError("unknown config field '" + k + "'");
        check_type(*f, v);
        if (f->is_path && !v.get<std::string>().empty()) {
            fs::path p = v.get<std::string>();
            merged[k] = (p.is_absolute() ? p : base / p).lexically_normal().string();
        } else {
            merged[k] = v;
        }
    }
}

}  // namespace

json parse_field_value(const ConfigField& field, const std::string& text) {
    const auto& d = field.default_value;
    try {
        if (d.is_string()) return text;
        if (d.is_boolean()) {
            if (text == "true" || text == "1" || text == "on") return true;
            if (text == "false" || text == "0" || text == "off") return false;
            throw InputError("");
        }
        std::size_t pos = 0;
        if (d.is_number_integer()) {
            auto v = std::stoull(text, &pos);
            if (pos != text.size() || text.starts_with('-')) throw InputError("");
            return v;
        }
        auto v = std::stod(text, &pos);
        if (pos != text.size()) throw InputError("");
        return v;
    } catch (const std::exception&) {
        throw InputError("invalid value '" + text + "' for --" + field.name);
    }
}

RunConfig load_run_config(const std::optional<fs::path>& file, const json& overrides) {
    json merged = json::object();
    json defaults = json::object();
    for (const auto& f : config_fields()) defaults[f.name] = f.default_value;
    apply_layer(merged, defaults, default_data_dir());
    // index_dir defaults to the working directory rather than the data dir
    merged["index_dir"] = "index";
    if (file) {
        std::ifstream in(*file);
        if (!in) throw MissingArtifactError("cannot open config file " + file->string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InputError(file->string() + ": " + e.what());
        }
        apply_layer(merged, j, file->parent_path());
    }
    apply_layer(merged, overrides, fs::path("."));

    RunConfig c;
    c.corpus = merged["corpus"].get<std::string>();
    c.index_dir = merged["index_dir"].get<std::string>();
    c.stage_patterns = merged["stage_patterns"].get<std::string>();
    c.triage_rules = merged["triage_rules"].get<std::string>();
    c.crisis_keywords = merged["crisis_keywords"].get<std::string>();
    c.symptom_bank = merged["symptom_bank"].get<std::string>();
    c.templates = merged["templates"].get<std::string>();
    c.prompt = merged["prompt"].get<std::string>();
    c.translations = merged["translations"].get<std::string>();
    c.embedder_vectors = merged["embedder_vectors"].get<std::string>();
    c.retrieval.k_dense = merged["k_dense"].get<std::size_t>();
    c.retrieval.k_rrf = merged["k_rrf"].get<std::size_t>();
    c.retrieval.k_rerank = merged["k_rerank"].get<std::size_t>();
    c.retrieval.top_k = merged["top_k"].get<std::size_t>();
    c.retrieval.bm25_k1 = merged["bm25_k1"].get<double>();
    c.retrieval.bm25_b = merged["bm25_b"].get<double>();
    c.retrieval.stage_filter = merged["stage_filter"].get<bool>();
    c.tau_now = merged["tau_now"].get<double>();
    c.tau_sd = merged["tau_sd"].get<double>();
    c.generation.temperature = merged["temperature"].get<double>();
    c.generation.max_retries = merged["max_retries"].get<int>();
    c.generation.timeout = std::chrono::milliseconds(std::llround(merged["timeout_s"].get<double>() * 1000.0));
    c.embedder = merged["embedder"].get<std::string>();
    c.embedder_dim = merged["embedder_dim"].get<std::size_t>();
    c.reranker = merged["reranker"].get<std::string>();
    c.generator = merged["generator"].get<std::string>();
    c.translator = merged["translator"].get<std::string>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.same_day_addendum = merged["same_day_addendum"].get<bool>();
    c.trace_timing = merged["trace_timing"].get<bool>();
    c.jobs = std::max<std::size_t>(1, merged["jobs"].get<std::size_t>());
    c.retrieval.validate();
    if (!(c.tau_sd > 0.0 && c.tau_sd < c.tau_now && c.tau_now <= 1.0))
        throw InputError("thresholds must satisfy 0 < tau_sd < tau_now <= 1");
    return c;
}

json RunConfig::to_json() const {
    return {{"corpus", corpus.string()},
            {"index_dir", index_dir.string()},
            {"stage_patterns", stage_patterns.string()},
            {"triage_rules", triage_rules.string()},
            {"crisis_keywords", crisis_keywords.string()},
            {"symptom_bank", symptom_bank.string()},
            {"templates", templates.string()},
            {"prompt", prompt.string()},
            {"translations", translations.string()},
            {"embedder_vectors", embedder_vectors.string()},
            {"k_dense", retrieval.k_dense},
            {"k_rrf", retrieval.k_rrf},
            {"k_rerank", retrieval.k_rerank},
            {"top_k", retrieval.top_k},
            {"bm25_k1", retrieval.bm25_k1},
            {"bm25_b", retrieval.bm25_b},
            {"stage_filter", retrieval.stage_filter},
            {"tau_now", tau_now},
            {"tau_sd", tau_sd},
            {"temperature", generation.temperature},
            {"max_retries", generation.max_retries},
            {"timeout_s", double(generation.timeout.count()) / 1000.0},
            {"embedder", embedder},
            {"embedder_dim", embedder_dim},
            {"reranker", reranker},
            {"generator", generator},
            {"translator", translator},
            {"seed", seed},
            {"same_day_addendum", same_day_addendum},
            {"trace_timing", trace_timing},
            {"jobs", jobs}};
}

// ---------------------------------------------------------------------------

json IndexManifest::to_json() const {
    return {{"corpus_digest", corpus_digest},
            {"sparse_digest", sparse_digest},
            {"dense_digest", dense_digest},
            {"embedder", embedder}};
}

IndexManifest IndexManifest::from_json(const json& j) {
    try {
        return {j.at("corpus_digest").get<std::string>(), j.at("sparse_digest").get<std::string>(),
                j.at("dense_digest").get<std::string>(), j.at("embedder").get<std::string>()};
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed index manifest: ") + e.what());
    }
}

Runtime::Runtime(RunConfig cfg) : cfg_(std::move(cfg)) {
    store_ = corpus::load_corpus(cfg_.corpus);
    patterns_ = stage::PatternPack::load(cfg_.stage_patterns);
    // Chunks carry no stage field; tag them with the stage cues their text matches.
    auto tags = std::make_shared<std::unordered_map<std::string, unsigned>>();
    for (const auto& c : store_) {
        unsigned mask = 0;
        for (const auto& p : patterns_.patterns())
            if (regex_util::search(c.text, p.re)) mask |= 1u << static_cast<unsigned>(p.stage);
        (*tags)[c.id] = mask;
    }
    chunk_stages_ = std::move(tags);

    if (cfg_.embedder == "hash") {
        embedder_ = std::make_shared<retrieval::HashEmbedder>(cfg_.embedder_dim);
    } else if (cfg_.embedder == "lookup") {
        if (cfg_.embedder_vectors.empty()) throw InputError("embedder 'lookup' needs embedder_vectors");
        embedder_ = std::make_shared<retrieval::LookupEmbedder>(retrieval::LookupEmbedder::from_file(cfg_.embedder_vectors));
    } else {
        throw InputError("unknown embedder '" + cfg_.embedder + "'");
    }

    if (cfg_.reranker == "token-overlap")
        reranker_ = std::make_unique<retrieval::TokenOverlapReranker>();
    else if (cfg_.reranker != "none")
        throw InputError("unknown reranker '" + cfg_.reranker + "'");

    if (cfg_.translator == "lookup")
        translator_ = std::make_shared<lang::LookupTranslator>(lang::LookupTranslator::from_file(cfg_.translations));
    else if (cfg_.translator == "none")
        translator_ = std::make_shared<lang::LookupTranslator>();
    else
        throw InputError("unknown translator '" + cfg_.translator + "'");

    if (cfg_.generator != "extractive") throw InputError("unknown generator '" + cfg_.generator + "'");
    generator_ = std::make_shared<pipeline::ExtractiveGenerator>();

    triage_.rules = triage::RulePack::load(cfg_.triage_rules);
    triage_.crisis = triage::CrisisClassifier::load(cfg_.crisis_keywords);
    triage_.semantic = std::make_shared<triage::SemanticMatcher>(triage::SemanticMatcher::load_bank(cfg_.symptom_bank),
                                                                 embedder_, cfg_.tau_now, cfg_.tau_sd);
    templates_ = pipeline::TemplatePack::load(cfg_.templates);
    prompt_ = pipeline::PromptTemplate::load(cfg_.prompt);
}

void Runtime::build_indexes() {
    sparse_ = retrieval::build_bm25_index(store_, cfg_.retrieval);
    dense_ = retrieval::build_dense_index(store_, *embedder_);
}

namespace {

json read_json(const fs::path& p) {
    if (!fs::exists(p)) throw MissingArtifactError("missing index artifact " + p.string() + " (run 'index' first)");
    try {
        return json::parse(jsonl::read_file(p));
    } catch (const json::parse_error& e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

}  // namespace

void Runtime::load_indexes() {
    auto manifest = IndexManifest::from_json(read_json(cfg_.index_dir / "manifest.json"));
    const auto sparse_text = jsonl::read_file(cfg_.index_dir / "sparse.json");
    const auto dense_text = jsonl::read_file(cfg_.index_dir / "dense.json");
    if (text::sha256_hex(sparse_text) != manifest.sparse_digest || text::sha256_hex(dense_text) != manifest.dense_digest)
        throw InputError("index snapshots do not match their manifest in " + cfg_.index_dir.string());
    if (manifest.corpus_digest != corpus::digest(store_))
        throw InputError("indexes in " + cfg_.index_dir.string() + " were built from a different corpus; re-run 'index'");
    if (manifest.embedder != embedder_->name())
        throw InputError("dense index was built with embedder '" + manifest.embedder + "', config uses '" +
                         embedder_->name() + "'");
    sparse_ = retrieval::SparseIndex::from_json(json::parse(sparse_text));
    dense_ = retrieval::DenseIndex::from_json(json::parse(dense_text));
}

const retrieval::SparseIndex& Runtime::sparse() const {
    if (!sparse_) throw MissingArtifactError("sparse index not loaded");
    return *sparse_;
}

const retrieval::DenseIndex& Runtime::dense() const {
    if (!dense_) throw MissingArtifactError("dense index not loaded");
    return *dense_;
}

IndexManifest Runtime::manifest() const {
    return {corpus::digest(store_), text::sha256_hex(sparse().to_json().dump(1)),
            text::sha256_hex(dense().to_json().dump(1)), embedder_->name()};
}

bool Runtime::write_indexes(IndexManifest* manifest_out) const {
    auto m = manifest();
    if (manifest_out) *manifest_out = m;
    const auto mpath = cfg_.index_dir / "manifest.json";
    if (fs::exists(mpath) && fs::exists(cfg_.index_dir / "sparse.json") && fs::exists(cfg_.index_dir / "dense.json")) {
        try {
            if (IndexManifest::from_json(json::parse(jsonl::read_file(mpath))) == m &&
                text::sha256_hex(jsonl::read_file(cfg_.index_dir / "sparse.json")) == m.sparse_digest &&
                text::sha256_hex(jsonl::read_file(cfg_.index_dir / "dense.json")) == m.dense_digest)
                return false;
        } catch (const std::exception&) {
            // unreadable manifest: rewrite below
        }
    }
    jsonl::write_file(cfg_.index_dir / "sparse.json", sparse().to_json().dump(1));
    jsonl::write_file(cfg_.index_dir / "dense.json", dense().to_json().dump(1));
    jsonl::write_file(mpath, m.to_json().dump(2) + "\n");
    return true;
}

retrieval::RetrievalContext Runtime::retrieval_context() const {
    retrieval::RetrievalContext ctx;
    ctx.store = &store_;
    // triage-only callers never touch retrieval, so missing indexes stay null
    ctx.sparse = sparse_ ? &*sparse_ : nullptr;
    ctx.dense = dense_ ? &*dense_ : nullptr;
    ctx.embedder = embedder_.get();
    ctx.reranker = reranker_.get();
    ctx.config = cfg_.retrieval;
    // Untagged chunks are general guidance and pass every stage.
    ctx.stage_filter = [tags = chunk_stages_](const corpus::Chunk& c, LifeStage s) {
        auto it = tags->find(c.id);
        return it == tags->end() || it->second == 0 || (it->second >> static_cast<unsigned>(s)) & 1u;
    };
    return ctx;
}

pipeline::Pipeline Runtime::make_pipeline(std::optional<LifeStage> stage_override,
                                          std::shared_ptr<const pipeline::GeneratorProvider> generator) const {
    pipeline::PipelineResources res;
    res.patterns = &patterns_;
    res.triage = &triage_;
    res.templates = &templates_;
    res.prompt = &prompt_;
    res.retrieval = retrieval_context();
    res.translator = translator_;
    res.generator = generator ? std::move(generator) : generator_;
    pipeline::PipelineConfig pc;
    pc.retrieval = cfg_.retrieval;
    pc.generation = cfg_.generation;
    pc.same_day_addendum = cfg_.same_day_addendum;
    pc.trace_timing = cfg_.trace_timing;
    pc.stage_override = stage_override;
    return pipeline::Pipeline(std::move(res), pc);
}

}  // namespace mhrag::app
