#pragma once

// Shared helpers for unit and acceptance tests.

#include "mhrag/app.hpp"
#include "mhrag/corpus.hpp"
#include "mhrag/retrieval/bm25.hpp"
#include "mhrag/retrieval/dense.hpp"
#include "mhrag/retrieval/providers.hpp"

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>

namespace mhrag::testing {

inline std::filesystem::path data_dir() { return MHRAG_TEST_DATA_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }

/// Runtime over the shipped data packs with in-memory indexes.
inline std::unique_ptr<app::Runtime> shipped_runtime(const nlohmann::json& overrides = nlohmann::json::object()) {
    auto cfg = app::load_run_config(std::nullopt, overrides);
    auto rt = std::make_unique<app::Runtime>(cfg);
    rt->build_indexes();
    return rt;
}

inline corpus::ChunkStore store_from_jsonl(const std::string& jsonl) {
    std::istringstream in(jsonl);
    return corpus::load_corpus(in, "<inline>");
}

/// The planted 20-chunk hybrid fixture with its lookup vectors.
struct PlantedFixture {
    corpus::ChunkStore store;
    std::shared_ptr<retrieval::LookupEmbedder> embedder;
    retrieval::SparseIndex sparse;
    retrieval::DenseIndex dense;
    std::string query;
};

inline PlantedFixture planted_fixture() {
    PlantedFixture f;
    f.store = corpus::load_corpus(fixture("planted_corpus.jsonl"));
    f.embedder = std::make_shared<retrieval::LookupEmbedder>(
        retrieval::LookupEmbedder::from_file(fixture("planted_vectors.json")));
    f.sparse = retrieval::build_bm25_index(f.store, {});
    f.dense = retrieval::build_dense_index(f.store, *f.embedder);
    f.query = "misoprostol dose for postpartum bleeding";
    return f;
}

}  // namespace mhrag::testing
