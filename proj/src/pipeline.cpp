#include "mhrag/pipeline.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

namespace mhrag::pipeline {

namespace {

bool is_space_cp(char32_t v) {
    return v == ' ' || v == '\t' || v == '\n' || v == '\r' || v == '\v' || v == '\f' || v == 0xA0 || v == 0x1680 ||
           (v >= 0x2000 && v <= 0x200A) || v == 0x2028 || v == 0x2029 || v == 0x202F || v == 0x205F || v == 0x3000;
}

bool is_control_cp(char32_t v) { return v < 0x20 || v == 0x7F || (v >= 0x80 && v <= 0x9F); }

std::string short_digest(std::string_view s) { return text::sha256_hex(s).substr(0, 16); }

class StepTimer {
public:
    StepTimer() : start_(std::chrono::steady_clock::now()) {}
    std::chrono::microseconds elapsed() const {
        return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start_);
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string first_sentence(std::string_view s) {
    static constexpr std::string_view kDanda = "\xE0\xA5\xA4";  // U+0964
    std::size_t end = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '.' || s[i] == '!' || s[i] == '?') {
            end = i + 1;
            break;
        }
        if (s.substr(i, kDanda.size()) == kDanda) {
            end = i + kDanda.size();
            break;
        }
    }
    std::string out(s.substr(0, end));
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

std::string normalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (const auto& cp : text::decode_utf8(raw)) {
        if (is_space_cp(cp.value)) {
            pending_space = !out.empty();
            continue;
        }
        if (is_control_cp(cp.value)) continue;
        if (pending_space) out.push_back(' ');
        pending_space = false;
        text::append_utf8(out, cp.value);
    }
    if (out.empty()) throw InputError("empty query");
    return out;
}

// ---------------------------------------------------------------------------
// Trace

void Trace::add(std::string name, std::string_view input, std::string_view output, nlohmann::json detail,
                std::optional<std::chrono::microseconds> elapsed) {
    TraceStep s{std::move(name), short_digest(input), short_digest(output), std::move(detail), std::nullopt};
    if (timing_ && elapsed) s.elapsed_us = elapsed->count();
    steps_.push_back(std::move(s));
}

void Trace::flag(const std::string& f) {
    if (!has_flag(f)) flags_.push_back(f);
}

bool Trace::has_step(std::string_view name) const { return step(name) != nullptr; }

const TraceStep* Trace::step(std::string_view name) const {
    for (const auto& s : steps_)
        if (s.name == name) return &s;
    return nullptr;
}

bool Trace::has_flag(std::string_view f) const {
    for (const auto& x : flags_)
        if (x == f) return true;
    return false;
}

nlohmann::json Trace::to_json() const {
    auto steps = nlohmann::json::array();
    for (const auto& s : steps_) {
        nlohmann::json j = {{"step", s.name}, {"input_digest", s.input_digest}, {"output_digest", s.output_digest}};
        if (!s.detail.is_null()) j["detail"] = s.detail;
        if (s.elapsed_us) j["elapsed_us"] = *s.elapsed_us;
        steps.push_back(std::move(j));
    }
    return {{"steps", std::move(steps)}, {"flags", flags_}};
}

nlohmann::json FinalResponse::envelope() const {
    return {{"text", text},
            {"kind", kind == ResponseKind::Template ? "template" : "informational"},
            {"label", std::string(to_string(label))},
            {"sources", sources},
            {"trace_ref", short_digest(trace.to_json().dump())}};
}

// ---------------------------------------------------------------------------
// Templates

void TemplatePack::add(TemplateId t, lang::LanguageTag l, std::string text) {
    if (t == TemplateId::Pass) throw InputError("PASS has no template");
    texts_[{t, l}] = std::move(text);
}

TemplatePack TemplatePack::load(std::istream& in, const std::string& source) {
    TemplatePack pack;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        auto id_str = jsonl::require_string(rec, "template", source, line);
        auto id = parse_template_id(id_str);
        if (!id || *id == TemplateId::Pass) throw ParseError(source, line, "unknown template '" + id_str + "'");
        auto lang_str = jsonl::require_string(rec, "lang", source, line);
        auto tag = lang::parse_language_tag(lang_str);
        if (!tag) throw ParseError(source, line, "unknown language '" + lang_str + "'");
        pack.add(*id, *tag, jsonl::require_string(rec, "text", source, line));
    });
    return pack;
}

TemplatePack TemplatePack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open template pack " + path.string());
    return load(in, path.string());
}

const std::string& TemplatePack::text(TemplateId t, lang::LanguageTag l, bool& fell_back) const {
    fell_back = false;
    if (auto it = texts_.find({t, l}); it != texts_.end()) return it->second;
    if (auto it = texts_.find({t, lang::LanguageTag::En}); it != texts_.end()) {
        fell_back = l != lang::LanguageTag::En;
        return it->second;
    }
    throw MissingArtifactError("no template text for " + std::string(to_string(t)));
}

FinalResponse render_template(TemplateId t, const QueryEnvelope& env, const TemplatePack& pack) {
    if (t == TemplateId::Pass) throw InputError("PASS is not a template");
    bool fell_back = false;
    FinalResponse r;
    r.text = pack.text(t, env.lang, fell_back);
    r.kind = ResponseKind::Template;
    r.label = t;
    if (fell_back) r.trace.flag("lang_fallback");
    return r;
}

FinalResponse render_template(std::string_view template_id, const QueryEnvelope& env, const TemplatePack& pack) {
    auto t = parse_template_id(template_id);
    if (!t) throw InputError("unknown template id '" + std::string(template_id) + "'");
    return render_template(*t, env, pack);
}

// ---------------------------------------------------------------------------
// Generation contract

ParsedGeneration parse_leading_label(std::string_view raw) {
    ParsedGeneration out;
    auto nl = raw.find('\n');
    std::string_view first = raw.substr(0, nl);
    auto b = first.find_first_not_of(" \t\r");
    auto e = first.find_last_not_of(" \t\r");
    std::string_view trimmed = b == std::string_view::npos ? std::string_view{} : first.substr(b, e - b + 1);
    if (auto label = parse_template_id(trimmed)) {
        out.label = *label;
        out.body = nl == std::string_view::npos ? std::string() : std::string(raw.substr(nl + 1));
        return out;
    }
    out.label = TemplateId::Pass;
    out.body = std::string(raw);
    out.malformed = true;
    return out;
}

PromptTemplate PromptTemplate::parse(std::string_view content) {
    PromptTemplate p;
    auto sep = content.find("\n---\n");
    if (sep == std::string_view::npos) throw InputError("prompt template needs a '---' separator line");
    p.system_ = std::string(content.substr(0, sep));
    p.body_ = std::string(content.substr(sep + 5));
    if (p.body_.find("{context}") == std::string::npos || p.body_.find("{question}") == std::string::npos)
        throw InputError("prompt body must contain {context} and {question}");
    return p;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) { return parse(jsonl::read_file(path)); }

std::string PromptTemplate::render_context(const std::vector<EvidenceChunk>& context) const {
    std::string out;
    for (const auto& c : context) out += "[" + c.id + "] " + c.text + "\n";
    return out;
}

std::string PromptTemplate::assemble(const PromptParts& parts) const {
    auto replace = [](std::string s, std::string_view key, const std::string& value) {
        auto pos = s.find(key);
        if (pos != std::string::npos) s.replace(pos, key.size(), value);
        return s;
    };
    auto body = replace(body_, "{context}", render_context(parts.context));
    body = replace(body, "{question}", parts.question);
    return parts.system + "\n\n" + body;
}

std::string ExtractiveGenerator::generate(const PromptParts& parts, const std::string&) const {
    std::string out = "PASS\n";
    if (parts.context.empty()) return out + "I don't have enough information to answer that accurately.";
    for (const auto& c : parts.context) out += first_sentence(c.text) + " [" + c.id + "]\n";
    return out;
}

std::vector<std::string> cited_chunk_ids(std::string_view body, const std::vector<std::string>& evidence) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = body.find('[', pos)) != std::string_view::npos) {
        auto end = body.find(']', pos + 1);
        if (end == std::string_view::npos) break;
        std::string id(body.substr(pos + 1, end - pos - 1));
        if (std::find(evidence.begin(), evidence.end(), id) != evidence.end() &&
            std::find(out.begin(), out.end(), id) == out.end())
            out.push_back(std::move(id));
        pos = end + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(PipelineResources res, PipelineConfig config) : res_(std::move(res)), config_(std::move(config)) {
    if (!res_.patterns || !res_.triage || !res_.templates || !res_.prompt || !res_.translator || !res_.generator)
        throw MissingArtifactError("pipeline resources are incomplete");
    config_.retrieval.validate();
    res_.retrieval.config = config_.retrieval;
}

QueryEnvelope Pipeline::prepare(std::string_view raw_query, const stage::PlatformMetadata& meta, Trace& trace) const {
    QueryEnvelope env;
    env.raw = std::string(raw_query);
    env.meta = meta;
    meta.validate();

    StepTimer t0;
    env.normalized = normalize(raw_query);
    trace.add("normalize", env.raw, env.normalized, nullptr, t0.elapsed());

    StepTimer t1;
    env.lang = lang::detect_language(env.normalized);
    try {
        env.english = lang::english_view(env.normalized, env.lang, *res_.translator);
    } catch (const lang::TranslationError& e) {
        trace.flag("translation_failed");
        spdlog::warn("translation failed, continuing with original-language processing: {}", e.what());
    }
    trace.add("language", env.normalized, env.english.value_or(""),
              {{"lang", std::string(lang::to_string(env.lang))}, {"translated", env.lang != lang::LanguageTag::En}},
              t1.elapsed());

    StepTimer t2;
    env.stage = config_.stage_override ? *config_.stage_override
                                       : stage::extract_stage(env.normalized, meta, *res_.patterns);
    trace.add("stage", env.normalized, to_string(env.stage),
              {{"stage", std::string(to_string(env.stage))}, {"overridden", config_.stage_override.has_value()}},
              t2.elapsed());

    StepTimer t3;
    env.concerns = stage::extract_concerns(env.normalized, env.stage, *res_.patterns);
    auto tags = nlohmann::json::array();
    for (auto c : env.concerns) tags.push_back(std::string(stage::to_string(c)));
    trace.add("concerns", env.normalized, tags.dump(), {{"tags", tags}}, t3.elapsed());
    return env;
}

std::string Pipeline::call_generator(const PromptParts& parts, const std::string& prompt, Trace& trace) const {
    const int attempts = 1 + std::max(0, config_.generation.max_retries);
    std::string last_error = "no attempts";
    for (int i = 0; i < attempts; ++i) {
        auto gen = res_.generator;
        std::packaged_task<std::string()> task([gen, parts, prompt] { return gen->generate(parts, prompt); });
        auto fut = task.get_future();
        std::thread(std::move(task)).detach();
        if (fut.wait_for(config_.generation.timeout) != std::future_status::ready) {
            last_error = "timeout";
            trace.flag("generation_retry");
            continue;
        }
        try {
            return fut.get();
        } catch (const std::exception& e) {
            last_error = e.what();
            trace.flag("generation_retry");
        }
    }
    throw ProviderError("generation failed after " + std::to_string(attempts) + " attempts: " + last_error);
}

FinalResponse Pipeline::run(std::string_view raw_query, const stage::PlatformMetadata& meta) const {
    Trace trace(config_.trace_timing);
    auto env = prepare(raw_query, meta, trace);

    StepTimer tt;
    auto routing = triage::pre_gen_triage(env.normalized, env.english, env.stage, env.concerns, *res_.triage);
    auto routing_json = routing.to_json();
    trace.add("triage", env.normalized, routing_json.dump(), routing_json, tt.elapsed());
    if (routing.provenance.degraded) trace.flag("triage_degraded");

    auto finish_template = [&](TemplateId t, const std::string& reason) {
        auto resp = render_template(t, env, *res_.templates);
        for (const auto& f : resp.trace.flags()) trace.flag(f);
        trace.add("template", to_string(t), resp.text, {{"template", std::string(to_string(t))}, {"reason", reason}});
        resp.trace = std::move(trace);
        resp.sources.clear();
        return resp;
    };

    if (routing.level != RoutingLevel::Pass) {
        auto resp = finish_template(routing.template_id, "pre_generation_triage");
        if (config_.same_day_addendum && routing.level == RoutingLevel::SameDay) {
            auto rr = retrieval::retrieve_and_rerank(env.normalized, env.english, env.stage, env.concerns,
                                                     res_.retrieval);
            if (!rr.evidence.empty()) {
                auto pos = res_.retrieval.store->position(rr.evidence[0].chunk_id);
                resp.text += "\n\n" + first_sentence(res_.retrieval.store->at(*pos).text);
                resp.trace.add("addendum", env.normalized, rr.evidence[0].chunk_id);
            }
        }
        return resp;
    }

    StepTimer tr;
    auto rr = retrieval::retrieve_and_rerank(env.normalized, env.english, env.stage, env.concerns, res_.retrieval);
    for (const auto& w : rr.trace.warnings) spdlog::warn("{}", w);
    if (rr.trace.dense_failed) trace.flag("dense_failed");
    if (rr.trace.rerank_failed) trace.flag("rerank_failed");
    if (rr.trace.rerank_skipped) trace.flag("rerank_skipped");
    auto evidence_ids = rr.evidence.ids();
    trace.add("retrieval", env.normalized, nlohmann::json(evidence_ids).dump(), rr.trace.to_json(), tr.elapsed());

    PromptParts parts;
    parts.system = res_.prompt->system();
    parts.question = env.normalized;
    for (const auto& id : evidence_ids) {
        auto pos = res_.retrieval.store->position(id);
        parts.context.push_back({id, res_.retrieval.store->at(*pos).text});
    }
    auto prompt = res_.prompt->assemble(parts);
    StepTimer tg;
    auto raw = call_generator(parts, prompt, trace);
    trace.add("generation", prompt, raw,
              {{"generator", res_.generator->name()}, {"temperature", config_.generation.temperature}}, tg.elapsed());

    auto parsed = parse_leading_label(raw);
    if (parsed.malformed) {
        trace.flag("malformed_label");
        spdlog::warn("generation did not start with a routing label; treating as PASS");
    }
    trace.add("post_check", raw, to_string(parsed.label),
              {{"label", std::string(to_string(parsed.label))},
               {"malformed", parsed.malformed},
               {"cited", cited_chunk_ids(parsed.body, evidence_ids)}});
    if (parsed.label != TemplateId::Pass) return finish_template(parsed.label, "post_generation_check");

    FinalResponse resp;
    resp.text = parsed.body;
    resp.kind = ResponseKind::Informational;
    resp.label = TemplateId::Pass;
    resp.sources = evidence_ids;
    resp.trace = std::move(trace);
    return resp;
}

}  // namespace mhrag::pipeline
