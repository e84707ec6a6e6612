#include "doctest.h"
#include "fixtures.hpp"

#include "mhrag/app.hpp"
#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"
#include "mhrag/regex_util.hpp"
#include "mhrag/retrieval/hybrid.hpp"

#include <filesystem>
#include <random>
#include <set>

using namespace mhrag;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("mhrag_app_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(p);
    return p;
}

const app::ConfigField& field(const std::string& name) {
    for (const auto& f : app::config_fields())
        if (f.name == name) return f;
    throw std::runtime_error("no field " + name);
}

}  // namespace

TEST_CASE("defaults") {
    auto c = app::load_run_config(std::nullopt);
    CHECK(c.retrieval.k_dense == 15);
    CHECK(c.retrieval.k_rrf == 60);
    CHECK(c.retrieval.k_rerank == 7);
    CHECK(c.retrieval.top_k == 7);
    CHECK(c.tau_now == 0.5);
    CHECK(c.tau_sd == 0.3);
    CHECK(c.generation.temperature == 0.1);
    CHECK(c.generation.max_retries == 3);
    CHECK(c.generation.timeout == std::chrono::seconds(60));
    CHECK(c.corpus == testing::data_dir() / "corpus.jsonl");
    CHECK(c.index_dir == fs::path("index"));
    auto j = c.to_json();
    for (const auto& f : app::config_fields()) CHECK(j.contains(f.name));
}

TEST_CASE("config file layering and path resolution") {
    auto dir = temp_dir("cfg");
    jsonl::write_file(dir / "run.json", R"({"top_k": 5, "k_rerank": 5, "corpus": "my.jsonl", "tau_now": 0.6})");
    auto c = app::load_run_config(dir / "run.json", {{"top_k", 3}, {"templates", "t.jsonl"}});
    CHECK(c.retrieval.top_k == 3);
    CHECK(c.retrieval.k_rerank == 5);
    CHECK(c.tau_now == 0.6);
    CHECK(c.corpus == dir / "my.jsonl");
    CHECK(c.templates.lexically_normal() == fs::path("t.jsonl"));

    jsonl::write_file(dir / "bad.json", R"({"tok_k": 5})");
    CHECK_THROWS_AS(app::load_run_config(dir / "bad.json"), InputError);
    jsonl::write_file(dir / "type.json", R"({"top_k": "five"})");
    CHECK_THROWS_AS(app::load_run_config(dir / "type.json"), InputError);
    jsonl::write_file(dir / "syntax.json", "{");
    CHECK_THROWS_AS(app::load_run_config(dir / "syntax.json"), InputError);
    CHECK_THROWS_AS(app::load_run_config(dir / "absent.json"), MissingArtifactError);
    CHECK_THROWS_AS(app::load_run_config(std::nullopt, {{"tau_sd", 0.7}}), InputError);
    CHECK_THROWS_AS(app::load_run_config(std::nullopt, {{"top_k", 9}}), InputError);
    fs::remove_all(dir);
}

TEST_CASE("flag values follow the field type") {
    CHECK(app::parse_field_value(field("top_k"), "4") == 4);
    CHECK(app::parse_field_value(field("tau_now"), "0.7") == 0.7);
    CHECK(app::parse_field_value(field("stage_filter"), "true") == true);
    CHECK(app::parse_field_value(field("embedder"), "lookup") == "lookup");
    CHECK_THROWS_AS(app::parse_field_value(field("top_k"), "-1"), InputError);
    CHECK_THROWS_AS(app::parse_field_value(field("top_k"), "4x"), InputError);
    CHECK_THROWS_AS(app::parse_field_value(field("stage_filter"), "maybe"), InputError);
}

TEST_CASE("index snapshots: write, reload, detect staleness") {
    auto dir = temp_dir("idx");
    auto cfg = app::load_run_config(std::nullopt, {{"index_dir", (dir / "index").string()}});
    app::Runtime rt(cfg);
    CHECK_THROWS_AS(rt.load_indexes(), MissingArtifactError);
    rt.build_indexes();
    app::IndexManifest m;
    CHECK(rt.write_indexes(&m));
    CHECK_FALSE(rt.write_indexes());
    CHECK(m == rt.manifest());

    app::Runtime again(cfg);
    again.load_indexes();
    CHECK(again.sparse() == rt.sparse());
    CHECK(again.dense() == rt.dense());

    // A different embedder must not silently reuse the dense snapshot.
    auto other = cfg;
    other.embedder_dim = 64;
    app::Runtime wrong(other);
    CHECK_THROWS_AS(wrong.load_indexes(), InputError);

    // Tampering with a snapshot is caught by the manifest digest.
    auto text = jsonl::read_file(dir / "index" / "sparse.json");
    jsonl::write_file(dir / "index" / "sparse.json", text + " ");
    app::Runtime tampered(cfg);
    CHECK_THROWS_AS(tampered.load_indexes(), InputError);

    // A different corpus invalidates the snapshot.
    auto lines = jsonl::read_file(cfg.corpus);
    jsonl::write_file(dir / "small.jsonl", lines.substr(0, lines.find('\n') + 1));
    auto small = cfg;
    small.corpus = dir / "small.jsonl";
    rt.write_indexes();
    app::Runtime stale(small);
    CHECK_THROWS_AS(stale.load_indexes(), InputError);
    fs::remove_all(dir);
}

TEST_CASE("provider selection") {
    CHECK_THROWS_AS(app::Runtime(app::load_run_config(std::nullopt, {{"embedder", "lookup"}})), InputError);
    CHECK_THROWS_AS(app::Runtime(app::load_run_config(std::nullopt, {{"embedder", "bert"}})), InputError);
    CHECK_THROWS_AS(app::Runtime(app::load_run_config(std::nullopt, {{"reranker", "bert"}})), InputError);
    app::Runtime none(app::load_run_config(std::nullopt, {{"reranker", "none"}, {"translator", "none"}}));
    CHECK(none.reranker() == nullptr);
    auto missing = app::load_run_config(std::nullopt, {{"corpus", "/nonexistent/c.jsonl"}});
    CHECK_THROWS_AS(app::Runtime{missing}, MissingArtifactError);
}

TEST_CASE("stage filter keeps untagged chunks and those matching the query stage") {
    auto r = testing::shipped_runtime({{"stage_filter", true}});
    auto ctx = r->retrieval_context();
    REQUIRE(ctx.stage_filter);
    const auto& pats = r->patterns().patterns();
    std::size_t tagged = 0;
    for (const auto& c : r->store()) {
        std::set<LifeStage> hit;
        for (const auto& p : pats)
            if (regex_util::search(c.text, p.re)) hit.insert(p.stage);
        tagged += !hit.empty();
        for (auto s : kAllStages) CHECK(ctx.stage_filter(c, s) == (hit.empty() || hit.count(s) > 0));
    }
    CHECK(tagged > 0);

    auto res = retrieval::retrieve_and_rerank("When does the baby get vaccines?", std::string("When does the baby get vaccines?"),
                                              LifeStage::Newborn, {}, ctx);
    for (const auto& id : res.evidence.ids()) CHECK(ctx.stage_filter(r->store().at(*r->store().position(id)), LifeStage::Newborn));
}
