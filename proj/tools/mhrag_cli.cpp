// mhrag: index, ask, triage, benchgen and eval commands.

#include "mhrag/app.hpp"
#include "mhrag/benchgen.hpp"
#include "mhrag/errors.hpp"
#include "mhrag/evalkit.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/retrieval/hybrid.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mhrag;

namespace {

struct Globals {
    std::string config_file;
    std::map<std::string, std::string> raw_fields;
    bool verbose = false;
};

app::RunConfig resolve_config(const Globals& g) {
    json overrides = json::object();
    for (const auto& f : app::config_fields()) {
        auto it = g.raw_fields.find(f.name);
        if (it != g.raw_fields.end()) overrides[f.name] = app::parse_field_value(f, it->second);
    }
    std::optional<fs::path> file;
    if (!g.config_file.empty()) file = g.config_file;
    return app::load_run_config(file, overrides);
}

struct MetaFlags {
    std::optional<int> gestational_week;
    std::optional<int> postpartum_weeks;
    std::optional<int> newborn_age_days;
    std::string stage_override;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--gestational-week", gestational_week, "host metadata: gestational week (1-45)");
        cmd->add_option("--postpartum-weeks", postpartum_weeks, "host metadata: weeks since birth");
        cmd->add_option("--newborn-age-days", newborn_age_days, "host metadata: newborn age in days");
        cmd->add_option("--stage-override", stage_override,
                        "force the life stage (maternal_pregnant | postpartum | newborn)");
    }

    stage::PlatformMetadata meta() const {
        stage::PlatformMetadata m;
        m.gestational_week = gestational_week;
        m.postpartum_weeks = postpartum_weeks;
        m.newborn_age_days = newborn_age_days;
        m.validate();
        return m;
    }

    std::optional<LifeStage> override_stage() const {
        if (stage_override.empty()) return std::nullopt;
        auto s = parse_life_stage(stage_override);
        if (!s) throw InputError("unknown stage '" + stage_override + "'");
        return s;
    }
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void write_report(const fs::path& dir, const std::string& name, const json& j, const std::string& txt) {
    jsonl::write_file(dir / (name + ".json"), j.dump(2) + "\n");
    jsonl::write_file(dir / (name + ".txt"), txt);
    std::cout << txt;
    std::cerr << "wrote " << (dir / (name + ".json")).string() << " and " << (dir / (name + ".txt")).string() << "\n";
}

std::string pct(double v) { return fmt::format("{:.1f}%", v * 100.0); }

// ---------------------------------------------------------------------------

int cmd_index(const Globals& g) {
    app::Runtime rt(resolve_config(g));
    rt.build_indexes();
    app::IndexManifest m;
    bool wrote = rt.write_indexes(&m);
    std::cout << json{{"index_dir", rt.config().index_dir.string()},
                      {"changed", wrote},
                      {"chunks", rt.store().size()},
                      {"manifest", m.to_json()}}
                     .dump(2)
              << "\n";
    if (!wrote) std::cerr << "indexes unchanged; nothing written\n";
    return 0;
}

int cmd_ask(const Globals& g, const std::string& query, const MetaFlags& mf, bool with_trace,
            const std::string& trace_out) {
    app::Runtime rt(resolve_config(g));
    rt.load_indexes();
    auto pipe = rt.make_pipeline(mf.override_stage());
    auto resp = pipe.run(query, mf.meta());
    auto out = resp.envelope();
    if (with_trace) out["trace"] = resp.trace.to_json();
    if (!trace_out.empty()) jsonl::write_file(trace_out, resp.trace.to_json().dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_triage(const Globals& g, const std::string& query, const MetaFlags& mf) {
    app::Runtime rt(resolve_config(g));
    auto pipe = rt.make_pipeline(mf.override_stage());
    pipeline::Trace trace(rt.config().trace_timing);
    auto env = pipe.prepare(query, mf.meta(), trace);
    auto outcome = triage::pre_gen_triage(env.normalized, env.english, env.stage, env.concerns, rt.triage_engine());
    auto tags = json::array();
    for (auto c : env.concerns) tags.push_back(std::string(stage::to_string(c)));
    json out = outcome.to_json();
    out["stage"] = std::string(to_string(env.stage));
    out["lang"] = std::string(lang::to_string(env.lang));
    out["concerns"] = tags;
    if (env.english) out["english"] = *env.english;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_benchgen(const Globals& g, const std::string& out_path, std::size_t n_items, int max_attempts) {
    auto cfg = resolve_config(g);
    app::Runtime rt(cfg);
    rt.load_indexes();
    benchgen::BuildOptions opts;
    opts.n_items = n_items;
    opts.seed = cfg.seed;
    opts.k_dense = cfg.retrieval.k_dense;
    opts.max_attempts = max_attempts;
    benchgen::KeywordQuestionGenerator qgen;
    benchgen::OverlapLabeler labeler;
    auto bench = benchgen::build_benchmark(rt.store(), {&rt.dense(), &rt.embedder()}, qgen, labeler, opts);
    for (const auto& w : bench.warnings) spdlog::warn("{}", w);
    jsonl::write_file(out_path, bench.to_json().dump(2) + "\n");
    json summary{{"out", out_path}, {"items", bench.items.size()}, {"skipped", bench.skipped.size()}};
    if (!bench.items.empty()) {
        auto st = benchgen::benchmark_stats(bench);
        summary["direct_per_item"] = {{"mean", st.mean_direct}, {"min", st.min_direct}, {"max", st.max_direct}};
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        auto tok = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        try {
            ks.push_back(std::stoul(tok));
        } catch (const std::exception&) {
            throw InputError("bad K list '" + s + "'");
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return ks;
}

int cmd_eval_retrieval(const Globals& g, const std::string& bench_path, const std::string& ks_text,
                       const fs::path& out_dir) {
    auto cfg = resolve_config(g);
    app::Runtime rt(cfg);
    rt.load_indexes();
    json bj;
    try {
        bj = json::parse(jsonl::read_file(bench_path));
    } catch (const json::parse_error& e) {
        throw InputError(bench_path + ": " + e.what());
    }
    auto bench = benchgen::Benchmark::from_json(bj);
    if (bench.corpus_digest != corpus::digest(rt.store()))
        throw InputError("benchmark " + bench_path + " was built from a different corpus");
    if (bench.items.empty()) throw InputError("benchmark has no items");
    const auto ks = parse_ks(ks_text);
    const std::vector<std::string> systems = {"bm25", "dense", "hybrid_rrf", "hybrid_rrf_rerank"};
    std::vector<std::array<eval::RetrievalMetrics, 4>> per_item(bench.items.size());
    auto ctx = rt.retrieval_context();

    parallel_for(bench.items.size(), cfg.jobs, [&](std::size_t i) {
        const auto& item = bench.items[i];
        auto direct_v = item.direct_ids();
        std::set<std::string> direct(direct_v.begin(), direct_v.end());
        auto rr = retrieval::retrieve_and_rerank(item.question, item.question, LifeStage::MaternalPregnant, {}, ctx);
        per_item[i][0] = eval::retrieval_metrics(rr.trace.sparse, direct, ks);
        per_item[i][1] = eval::retrieval_metrics(rr.trace.dense, direct, ks);
        per_item[i][2] = eval::retrieval_metrics(rr.trace.fused, direct, ks);
        per_item[i][3] = eval::retrieval_metrics(rr.trace.reranked ? *rr.trace.reranked : rr.trace.fused, direct, ks);
    });

    std::map<std::string, eval::RetrievalMetrics> by_system;
    json j{{"benchmark", bench_path}, {"items", bench.items.size()}, {"systems", json::object()}};
    for (std::size_t s = 0; s < systems.size(); ++s) {
        std::vector<eval::RetrievalMetrics> v;
        for (const auto& row : per_item) v.push_back(row[s]);
        by_system[systems[s]] = eval::mean_metrics(v);
        j["systems"][systems[s]] = by_system[systems[s]].to_json();
    }
    auto txt = fmt::format("Retrieval over {} benchmark questions (DIRECT labels)\n", bench.items.size()) +
               eval::format_retrieval(by_system);
    write_report(out_dir, "retrieval", j, txt);
    return 0;
}

int cmd_eval_triage(const Globals& g, const std::string& bench_path, const fs::path& out_dir) {
    auto cfg = resolve_config(g);
    app::Runtime rt(cfg);
    struct Item {
        std::string id, query;
        RoutingLevel gold;
        std::optional<LifeStage> stage;
        stage::PlatformMetadata meta;
    };
    std::vector<Item> items;
    jsonl::for_each_record(fs::path(bench_path), [&](const json& rec, std::size_t line) {
        Item it;
        it.id = rec.contains("id") ? jsonl::require_string(rec, "id", bench_path, line) : std::to_string(line);
        it.query = jsonl::require_string(rec, "query", bench_path, line);
        auto gold = parse_routing_level(jsonl::require_string(rec, "gold", bench_path, line));
        if (!gold) throw ParseError(bench_path, line, "gold must be EMERGENCY_NOW, SAME_DAY or PASS");
        it.gold = *gold;
        if (rec.contains("stage")) {
            auto s = parse_life_stage(jsonl::require_string(rec, "stage", bench_path, line));
            if (!s) throw ParseError(bench_path, line, "unknown stage");
            it.stage = s;
        }
        if (auto m = rec.find("meta"); m != rec.end() && m->is_object()) {
            if (m->contains("gestational_week")) it.meta.gestational_week = (*m)["gestational_week"].get<int>();
            if (m->contains("postpartum_weeks")) it.meta.postpartum_weeks = (*m)["postpartum_weeks"].get<int>();
            if (m->contains("newborn_age_days")) it.meta.newborn_age_days = (*m)["newborn_age_days"].get<int>();
        }
        items.push_back(std::move(it));
    });
    if (items.empty()) throw InputError(bench_path + ": no triage items");

    std::vector<RoutingLevel> pred(items.size()), gold(items.size());
    std::vector<json> rows(items.size());
    parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
        const auto& it = items[i];
        auto pipe = rt.make_pipeline(it.stage);
        pipeline::Trace trace;
        auto env = pipe.prepare(it.query, it.meta, trace);
        auto out = triage::pre_gen_triage(env.normalized, env.english, env.stage, env.concerns, rt.triage_engine());
        pred[i] = out.level;
        gold[i] = it.gold;
        rows[i] = {{"id", it.id},
                   {"query", it.query},
                   {"stage", std::string(to_string(env.stage))},
                   {"gold", std::string(to_string(it.gold))},
                   {"predicted", out.to_json()}};
    });

    auto conf = eval::confusion(pred, gold);
    auto scores = eval::triage_scores(conf);
    auto sev = eval::severity_breakdown(pred, gold);
    json j{{"confusion", {{"tp", conf.tp}, {"fn", conf.fn}, {"fp", conf.fp}, {"tn", conf.tn}}},
           {"scores", scores.to_json()},
           {"severity", json::object()},
           {"items", rows}};
    std::string txt = fmt::format("Binary triage routing ({} items; escalation = positive)\n", conf.total());
    txt += eval::format_confusion(conf, scores);
    if (conf.tp + conf.fn > 0) {
        auto ci = eval::wilson_interval(conf.fn, conf.tp + conf.fn);
        j["fn_rate_wilson95"] = {ci.lo, ci.hi};
        txt += fmt::format("missed escalations {}/{} ({}) 95% CI [{}, {}]\n", conf.fn, conf.tp + conf.fn,
                           pct(double(conf.fn) / double(conf.tp + conf.fn)), pct(ci.lo), pct(ci.hi));
    }
    txt += "recall by gold class:\n";
    for (const auto& [lvl, cr] : sev) {
        j["severity"][std::string(to_string(lvl))] = {{"correct", cr.correct}, {"total", cr.total}, {"recall", cr.recall()}};
        txt += fmt::format("  {:<14} {:>3}/{:<3} {}\n", to_string(lvl), cr.correct, cr.total, pct(cr.recall()));
    }
    write_report(out_dir, "triage", j, txt);
    return 0;
}

int cmd_eval_agreement(const std::string& experts_path, const std::string& judge_path, const std::string& mapping_path,
                       double threshold, int scale, const fs::path& out_dir) {
    auto experts = eval::RatingSet::load(experts_path, scale);
    std::optional<eval::DimensionMapping> mapping;
    if (!mapping_path.empty()) mapping = eval::DimensionMapping::load(mapping_path);
    std::optional<eval::RatingSet> judge;
    if (!judge_path.empty()) judge = eval::RatingSet::load(judge_path, scale);

    json j{{"dimensions", json::object()}, {"threshold", threshold}};
    std::string txt = fmt::format("{:<16} {:>8} {:>14} {:>10} {:>12} {:>10} {:>12} {:>9}\n", "dimension", "QWK",
                                  "range", "H-H MAE", "H-H within", "J-H MAE", "J-H within", "J-H QWK");
    for (const auto& dim : experts.dimensions()) {
        json dj;
        auto pw = eval::pairwise_qwk_weighted(experts, dim);
        dj["inter_expert_qwk"] = pw.to_json();
        double lo = 1.0, hi = -1.0;
        for (const auto& p : pw.per_pair) {
            lo = std::min(lo, p.kappa.kappa);
            hi = std::max(hi, p.kappa.kappa);
        }
        auto hh = eval::leave_one_out_agreement(experts, dim, threshold);
        dj["human_human"] = hh.to_json();
        std::string jh_mae = "-", jh_within = "-", jh_qwk = "-";
        if (judge) {
            std::map<std::string, std::map<std::string, double>> by_item;
            for (const auto& r : judge->records()) by_item[r.item_id][r.dimension] = r.score;
            std::map<std::string, double> jscore;
            if (mapping) {
                jscore = mapping->combine(by_item, dim);
            } else {
                for (const auto& [item, crit] : by_item)
                    if (auto it = crit.find(dim); it != crit.end()) jscore[item] = it->second;
            }
            if (!jscore.empty()) {
                auto jh = eval::judge_agreement(jscore, experts, dim, threshold);
                auto jq = eval::judge_consensus_qwk(jscore, experts, dim);
                dj["judge_human"] = jh.to_json();
                dj["judge_human_qwk"] = {{"kappa", jq.kappa}, {"degenerate", jq.degenerate},
                                         {"consensus_rounding", "half-up"}};
                jh_mae = fmt::format("{:.2f}", jh.mae);
                jh_within = pct(jh.frac_within);
                jh_qwk = fmt::format("{:.3f}", jq.kappa);
            }
        }
        j["dimensions"][dim] = dj;
        txt += fmt::format("{:<16} {:>8.2f} {:>14} {:>10.2f} {:>12} {:>10} {:>12} {:>9}\n", dim, pw.aggregate,
                           fmt::format("{:.2f}..{:.2f}", lo, hi), hh.mae, pct(hh.frac_within), jh_mae, jh_within,
                           jh_qwk);
    }
    txt += "QWK: pairwise, weighted by overlap. H-H: each expert vs mean of the others. J-H: judge vs expert mean.\n";
    write_report(out_dir, "agreement", j, txt);
    return 0;
}

int cmd_eval_judge_table(const std::string& scores_path, const fs::path& out_dir) {
    auto table = eval::aggregate_judge_scores(eval::load_judge_scores(fs::path(scores_path)));
    write_report(out_dir, "judge_table", table.to_json(), table.to_text());
    return 0;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Input: return 2;
        case ErrorKind::MissingArtifact: return 3;
        case ErrorKind::Provider: return 4;
        case ErrorKind::Internal: return 1;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Stage-aware maternal health RAG: indexing, triage, answering and evaluation"};
    cli.require_subcommand(1);
    cli.fallthrough();
    Globals g;
    cli.add_option("-c,--config", g.config_file, "JSON run config; flags override its values");
    cli.add_flag("-v,--verbose", g.verbose, "log at debug level");
    for (const auto& f : app::config_fields()) {
        std::string def = f.default_value.is_string() ? f.default_value.get<std::string>() : f.default_value.dump();
        if (f.is_path && !def.empty() && f.name != "index_dir") def = "<data>/" + def;
        cli.add_option_function<std::string>(
               "--" + f.name, [&g, name = f.name](const std::string& v) { g.raw_fields[name] = v; },
               f.help + " [default: " + (def.empty() ? "unset" : def) + "]")
            ->group("Run config");
    }
    cli.footer(fmt::format("<data> is {} (override with MHRAG_DATA_DIR).\n"
                           "Exit codes: 0 ok, 2 input error, 3 missing artifact, 4 provider failure.",
                           app::default_data_dir().string()));

    auto* index = cli.add_subcommand("index", "build sparse and dense index snapshots");

    auto* ask = cli.add_subcommand("ask", "answer one query through the full pipeline");
    std::string ask_query, trace_out;
    bool with_trace = false;
    MetaFlags ask_meta;
    ask->add_option("query", ask_query, "user query")->required();
    ask->add_flag("--trace", with_trace, "include the full step trace in the output");
    ask->add_option("--trace-out", trace_out, "also write the trace to this file");
    ask_meta.add_to(ask);

    auto* tri = cli.add_subcommand("triage", "triage-only dry run for one query");
    std::string tri_query;
    MetaFlags tri_meta;
    tri->add_option("query", tri_query, "user query")->required();
    tri_meta.add_to(tri);

    auto* bg = cli.add_subcommand("benchgen", "build a multi-evidence retrieval benchmark");
    std::string bg_out = "benchmark.json";
    std::size_t bg_items = 10;
    int bg_attempts = 3;
    bg->add_option("-o,--out", bg_out, "output file")->capture_default_str();
    bg->add_option("-n,--n-items", bg_items, "items to generate")->capture_default_str();
    bg->add_option("--max-attempts", bg_attempts, "anchor draws per item")->capture_default_str()->check(CLI::PositiveNumber);

    auto* ev = cli.add_subcommand("eval", "evaluation reports");
    ev->require_subcommand(1);
    std::string out_dir = "reports";
    ev->add_option("--out-dir", out_dir, "report directory")->capture_default_str();

    auto* ev_ret = ev->add_subcommand("retrieval", "Recall@K, Hit@K and MRR per retrieval stage");
    std::string ret_bench, ret_ks = "1,3,5,7,10";
    ev_ret->add_option("--benchmark", ret_bench, "benchmark JSON from benchgen")->required();
    ev_ret->add_option("--ks", ret_ks, "comma-separated K values")->capture_default_str();

    auto* ev_tri = ev->add_subcommand("triage", "confusion table and per-class recall");
    std::string tri_bench;
    ev_tri->add_option("--benchmark", tri_bench, "JSONL {id, query, gold, stage?, meta?}")->required();

    auto* ev_agr = ev->add_subcommand("agreement", "inter-expert QWK and judge-expert agreement");
    std::string agr_experts, agr_judge, agr_mapping;
    double agr_threshold = 0.5;
    int agr_scale = 3;
    ev_agr->add_option("--experts", agr_experts, "expert ratings (CSV or JSONL)")->required();
    ev_agr->add_option("--judge", agr_judge, "judge ratings (CSV or JSONL; dimension = judge criterion)");
    ev_agr->add_option("--mapping", agr_mapping, "expert dimension -> judge criteria mapping (JSON)");
    ev_agr->add_option("--threshold", agr_threshold, "within-threshold distance")->capture_default_str();
    ev_agr->add_option("--scale", agr_scale, "number of rating categories")->capture_default_str();

    auto* ev_jt = ev->add_subcommand("judge-table", "per-criterion means with paired t-tests");
    std::string jt_scores;
    ev_jt->add_option("--scores", jt_scores, "JSONL {system, query_id, criterion, score}")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = cli.exit(e);
        return rc == 0 ? 0 : 2;
    }
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
    spdlog::set_pattern("%^%l%$: %v");

    try {
        if (*index) return cmd_index(g);
        if (*ask) return cmd_ask(g, ask_query, ask_meta, with_trace, trace_out);
        if (*tri) return cmd_triage(g, tri_query, tri_meta);
        if (*bg) return cmd_benchgen(g, bg_out, bg_items, bg_attempts);
        if (*ev_ret) return cmd_eval_retrieval(g, ret_bench, ret_ks, out_dir);
        if (*ev_tri) return cmd_eval_triage(g, tri_bench, out_dir);
        if (*ev_agr) return cmd_eval_agreement(agr_experts, agr_judge, agr_mapping, agr_threshold, agr_scale, out_dir);
        if (*ev_jt) return cmd_eval_judge_table(jt_scores, out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
