#include "doctest.h"
#include "fixtures.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/retrieval/fusion.hpp"
#include "mhrag/retrieval/hybrid.hpp"
#include "mhrag/text.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace mhrag;
using namespace mhrag::retrieval;

namespace {

corpus::ChunkStore small_store() {
    return testing::store_from_jsonl(
        R"({"id": "a", "text": "iron tablets daily in pregnancy", "source_doc": "d", "language": "en"})"
        "\n"
        R"({"id": "b", "text": "iron rich foods and iron fortified flour", "source_doc": "d", "language": "en"})"
        "\n"
        R"({"id": "c", "text": "rest and fluids for a cold", "source_doc": "d", "language": "en"})"
        "\n"
        R"({"id": "d", "text": "breastfeeding in the first hour", "source_doc": "d", "language": "en"})"
        "\n");
}

/// Records the texts it was asked to embed.
class SpyEmbedder final : public EmbeddingProvider {
public:
    explicit SpyEmbedder(bool fail = false) : fail_(fail) {}
    std::vector<float> embed(std::string_view text) const override {
        seen.emplace_back(text);
        if (fail_ && seen.size() > 4) throw ProviderError("embedder down");
        return inner_.embed(text);
    }
    std::size_t dimension() const override { return inner_.dimension(); }
    std::string name() const override { return inner_.name(); }
    mutable std::vector<std::string> seen;

private:
    bool fail_;
    HashEmbedder inner_{128};
};

}  // namespace

TEST_CASE("scored list canonical order and validation") {
    auto l = ScoredList::from_unsorted({{"b", 1.0}, {"a", 1.0}, {"c", 2.0}});
    CHECK(l.ids() == std::vector<std::string>{"c", "a", "b"});
    CHECK(is_well_ordered(l.entries()));
    CHECK_THROWS_AS(ScoredList::from_unsorted({{"a", 1.0}, {"a", 2.0}}), InputError);
    CHECK_THROWS_AS(ScoredList::from_ordered({{"a", 1.0}, {"b", 2.0}}), InputError);
    auto kept = ScoredList::from_ordered({{"b", 1.0}, {"a", 1.0}});
    CHECK(kept.ids() == std::vector<std::string>{"b", "a"});
    CHECK_FALSE(is_well_ordered(kept.entries()));
    CHECK(is_well_ordered(kept.entries(), false));
    CHECK(l.truncated(2).size() == 2);
    CHECK(l.truncated(10).size() == 3);
}

TEST_CASE("bm25 idf is positive and decreasing in df") {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t df = 0; df <= 100; ++df) {
        double v = bm25_idf(100, df);
        CHECK(v > 0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(bm25_idf(3, 1) == doctest::Approx(std::log(1 + 2.5 / 1.5)));
}

TEST_CASE("bm25 retrieval") {
    auto store = small_store();
    auto idx = build_bm25_index(store, {});
    CHECK(idx.doc_count() == 4);
    CHECK(idx.df("iron") == 2);
    CHECK(idx.df("zebra") == 0);

    auto r = bm25_retrieve(idx, "iron");
    CHECK(r.ids() == std::vector<std::string>{"b", "a"});  // tf 2 beats tf 1
    CHECK(bm25_retrieve(idx, "zebra").empty());
    CHECK(bm25_retrieve(idx, "").empty());
    CHECK(bm25_retrieve(idx, "iron", 1).size() == 1);

    // Repeated query tokens count again.
    auto once = bm25_retrieve(idx, "flour");
    auto twice = bm25_retrieve(idx, "flour flour");
    CHECK(twice[0].score == doctest::Approx(2 * once[0].score));

    auto filtered = bm25_retrieve(idx, "iron", kAllResults, [](std::size_t pos) { return pos != 1; });
    CHECK(filtered.ids() == std::vector<std::string>{"a"});

    CHECK_THROWS_AS(build_bm25_index(corpus::ChunkStore{}, {}), InputError);
}

TEST_CASE("bm25 snapshot round trip is exact") {
    auto store = corpus::load_corpus(testing::data_dir() / "corpus.jsonl");
    auto idx = build_bm25_index(store, {});
    auto back = SparseIndex::from_json(nlohmann::json::parse(idx.to_json().dump()));
    CHECK(back == idx);
    CHECK(back.corpus_digest() == corpus::digest(store));
    for (const auto* q : {"iron pregnancy", "breastfeeding hour", "blood pressure"})
        CHECK(bm25_retrieve(back, q) == bm25_retrieve(idx, q));
}

TEST_CASE("dense index") {
    auto store = small_store();
    HashEmbedder emb(64);
    auto idx = build_dense_index(store, emb);
    CHECK(idx.size() == 4);
    CHECK(idx.dimension() == 64);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double n = 0;
        for (float x : idx.row(i)) n += x * x;
        CHECK(n == doctest::Approx(1.0));
    }
    auto r = dense_retrieve(idx, "iron tablets daily in pregnancy", 2, emb);
    REQUIRE(r.size() == 2);
    CHECK(r[0].chunk_id == "a");
    CHECK(r[0].score == doctest::Approx(1.0));

    auto back = DenseIndex::from_json(nlohmann::json::parse(idx.to_json().dump()));
    CHECK(back == idx);

    HashEmbedder other(32);
    CHECK_THROWS_AS(dense_retrieve(idx, "iron", 2, other), InputError);
    auto f = dense_retrieve(idx, "iron tablets", 4, emb, [](std::size_t pos) { return pos != 0; });
    for (const auto& e : f) CHECK(e.chunk_id != "a");
}

TEST_CASE("lookup embedder") {
    LookupEmbedder e(2, {{"x", {3, 4}}}, true);
    auto v = e.embed("x");
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK_THROWS_AS(e.embed("y"), ProviderError);
    LookupEmbedder loose(2, {{"x", {1, 0}}}, false);
    CHECK(loose.embed("y").size() == 2);
    CHECK_THROWS_AS(LookupEmbedder(2, {{"x", {1, 0, 0}}}), InputError);
    CHECK_THROWS_AS(LookupEmbedder(2, {{"x", {0, 0}}}), InputError);
}

TEST_CASE("rrf against brute force with custom k") {
    std::mt19937 rng(6);
    for (int t = 0; t < 200; ++t) {
        std::size_t k = 1 + rng() % 100;
        std::vector<ScoredList> lists;
        for (int l = 0; l < 3; ++l) {
            std::vector<ScoredEntry> e;
            for (int i = 0; i < 10; ++i)
                if (rng() % 2) e.push_back({std::string(1, char('a' + i)), double(rng() % 5)});
            lists.push_back(ScoredList::from_unsorted(e));
        }
        std::map<std::string, double> brute;
        for (const auto& l : lists)
            for (std::size_t r = 0; r < l.size(); ++r) brute[l[r].chunk_id] += 1.0 / double(r + 1 + k);
        auto fused = rrf_fuse(lists, k);
        CHECK(fused.size() == brute.size());
        CHECK(is_well_ordered(fused.entries()));
        for (const auto& e : fused) CHECK(e.score == doctest::Approx(brute[e.chunk_id]).epsilon(1e-14));
    }
    CHECK(rrf_fuse({}, 60).empty());
}

TEST_CASE("dedup keeps first occurrence") {
    auto d = deduplicate({{"a", 3}, {"b", 2}, {"a", 1}, {"c", 0}});
    CHECK(d.size() == 3);
    CHECK(d[0].score == 3);
}

TEST_CASE("rerank is stable and checks its scorer") {
    auto store = small_store();
    auto cand = ScoredList::from_unsorted({{"a", 4}, {"b", 3}, {"c", 2}, {"d", 1}});
    FunctionReranker flat([](auto, auto) { return 0.5; });
    CHECK(rerank(flat, "q", cand, 3, store).ids() == std::vector<std::string>{"a", "b", "c"});

    FunctionReranker by_len([](auto, std::string_view p) { return double(p.size()); });
    auto r = rerank(by_len, "q", cand, 4, store);
    CHECK(r[0].chunk_id == "b");

    FunctionReranker nan([](auto, auto) { return std::nan(""); });
    CHECK_THROWS_AS(rerank(nan, "q", cand, 2, store), ProviderError);
    FunctionReranker boom([](auto, auto) -> double { throw std::runtime_error("x"); });
    CHECK_THROWS_AS(rerank(boom, "q", cand, 2, store), ProviderError);
    CHECK_THROWS_AS(rerank(flat, "q", ScoredList{}, 2, store), InputError);
    CHECK_THROWS_AS(rerank(flat, "q", ScoredList::from_unsorted({{"zzz", 1}}), 2, store), InputError);
}

TEST_CASE("token overlap reranker") {
    TokenOverlapReranker r;
    CHECK(r.score("iron foods", "iron rich foods and flour") == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(r.score("iron", "") == 0.0);
}

TEST_CASE("hybrid stack: query routing, degradation, top_k") {
    auto store = small_store();
    auto sparse = build_bm25_index(store, {});
    SpyEmbedder spy;
    auto dense = build_dense_index(store, spy);
    spy.seen.clear();
    std::vector<std::string> rerank_queries;
    FunctionReranker rr([&](std::string_view q, std::string_view) {
        rerank_queries.emplace_back(q);
        return 1.0;
    });

    RetrievalContext ctx;
    ctx.store = &store;
    ctx.sparse = &sparse;
    ctx.dense = &dense;
    ctx.embedder = &spy;
    ctx.reranker = &rr;
    ctx.config.k_rerank = 3;
    ctx.config.top_k = 2;

    auto res = retrieve_and_rerank("ORIGINAL iron", std::string("english iron"), LifeStage::MaternalPregnant, {}, ctx);
    CHECK(res.evidence.size() == 2);
    CHECK(spy.seen == std::vector<std::string>{"ORIGINAL iron"});
    for (const auto& q : rerank_queries) CHECK(q == "english iron");
    CHECK(res.trace.dense_query == "ORIGINAL iron");
    CHECK(res.trace.sparse_query == "ORIGINAL iron");
    CHECK(res.trace.rerank_query == "english iron");

    auto no_en = retrieve_and_rerank("iron", std::nullopt, LifeStage::MaternalPregnant, {}, ctx);
    CHECK(no_en.trace.rerank_skipped);
    CHECK_FALSE(no_en.evidence.empty());

    SpyEmbedder broken(true);
    ctx.embedder = &broken;
    broken.seen.assign(10, "");
    auto deg = retrieve_and_rerank("iron", std::string("iron"), LifeStage::MaternalPregnant, {}, ctx);
    CHECK(deg.trace.dense_failed);
    CHECK_FALSE(deg.evidence.empty());

    FunctionReranker boom([](auto, auto) -> double { throw ProviderError("down"); });
    ctx.embedder = &spy;
    ctx.reranker = &boom;
    auto rf = retrieve_and_rerank("iron", std::string("iron"), LifeStage::MaternalPregnant, {}, ctx);
    CHECK(rf.trace.rerank_failed);
    CHECK(rf.evidence.ids() == rf.trace.fused.truncated(2).ids());
}

TEST_CASE("stage filter only applies when enabled") {
    auto store = small_store();
    auto sparse = build_bm25_index(store, {});
    HashEmbedder emb(64);
    auto dense = build_dense_index(store, emb);
    RetrievalContext ctx{&store, &sparse, &dense, &emb, nullptr, {}, {}};
    ctx.stage_filter = [](const corpus::Chunk& c, LifeStage) { return c.id != "b"; };
    auto off = retrieve_and_rerank("iron", std::string("iron"), LifeStage::Newborn, {}, ctx);
    auto off_ids = off.evidence.ids();
    CHECK(std::count(off_ids.begin(), off_ids.end(), "b") == 1);
    ctx.config.stage_filter = true;
    auto on = retrieve_and_rerank("iron", std::string("iron"), LifeStage::Newborn, {}, ctx);
    auto ids = on.evidence.ids();
    CHECK(std::count(ids.begin(), ids.end(), "b") == 0);
}

TEST_CASE("planted fixture: fusion recovers what each retriever misses") {
    auto f = testing::planted_fixture();
    auto dense = dense_retrieve(f.dense, f.query, 15, *f.embedder);
    auto sparse = bm25_retrieve(f.sparse, f.query);
    auto top5 = [](const ScoredList& l) { return l.truncated(5).ids(); };
    auto contains = [](const std::vector<std::string>& v, const char* id) {
        return std::find(v.begin(), v.end(), id) != v.end();
    };
    CHECK(contains(top5(sparse), "p-lex"));
    CHECK_FALSE(contains(top5(sparse), "p-sem"));
    CHECK(contains(top5(dense), "p-sem"));
    CHECK_FALSE(contains(top5(dense), "p-lex"));
    std::vector<ScoredList> lists = {dense, sparse};
    auto fused = top5(rrf_fuse(lists, 60));
    CHECK(contains(fused, "p-lex"));
    CHECK(contains(fused, "p-sem"));
}

TEST_CASE("retrieval config validation") {
    RetrievalConfig c;
    CHECK_NOTHROW(c.validate());
    c.top_k = 10;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = {};
    c.bm25_b = 1.5;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = {};
    c.k_dense = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
}
