#include "doctest.h"
#include "fixtures.hpp"

#include "mhrag/corpus.hpp"
#include "mhrag/errors.hpp"
#include "mhrag/stage.hpp"

#include <sstream>

using namespace mhrag;

namespace {

std::string rec(const std::string& id, const std::string& text, const std::string& lang = "en") {
    return R"({"id": ")" + id + R"(", "text": ")" + text + R"(", "source_doc": "d", "language": ")" + lang + "\"}\n";
}

std::size_t parse_error_line(const std::string& jsonl) {
    std::istringstream in(jsonl);
    try {
        corpus::load_corpus(in, "c.jsonl");
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("corpus loads and round-trips") {
    auto store = corpus::load_corpus(testing::data_dir() / "corpus.jsonl");
    CHECK(store.size() == 40);
    auto again = testing::store_from_jsonl(corpus::to_jsonl(store));
    CHECK(again == store);
    CHECK(corpus::digest(again) == corpus::digest(store));
    auto c = corpus::get_chunk(store, "anc-01");
    REQUIRE(c);
    CHECK(c->section_title == "Antenatal visits");
    CHECK_FALSE(corpus::get_chunk(store, "missing"));
    CHECK(store.position(store.at(7).id) == 7u);
}

TEST_CASE("corpus errors name the offending line") {
    CHECK(parse_error_line(rec("a", "x") + rec("a", "y")) == 2);
    CHECK(parse_error_line(rec("a", "x") + rec("b", "   ")) == 2);
    CHECK(parse_error_line(rec("a", "x") + rec("b", "y", "fr")) == 2);
    CHECK(parse_error_line(rec("a", "x") + "{\"id\": \"b\"}\n") == 2);
    CHECK(parse_error_line(rec("", "x")) == 1);
    CHECK_THROWS_AS(corpus::load_corpus(std::filesystem::path("/nonexistent.jsonl")), MissingArtifactError);

    std::istringstream in(rec("a", "x") + rec("b", "y", "hi"));
    CHECK_THROWS_AS(corpus::load_corpus(in, "c", {lang::LanguageTag::En}), ParseError);
}

TEST_CASE("digest changes with content") {
    auto a = testing::store_from_jsonl(rec("a", "x"));
    auto b = testing::store_from_jsonl(rec("a", "y"));
    CHECK(corpus::digest(a) != corpus::digest(b));
    CHECK(corpus::digest(a).size() == 64);
}

TEST_CASE("metadata overrides text cues") {
    auto pack = stage::PatternPack::load(testing::data_dir() / "stage_patterns.jsonl");
    stage::PlatformMetadata m;
    m.newborn_age_days = 3;
    CHECK(stage::extract_stage("I am 30 weeks pregnant", m, pack) == LifeStage::Newborn);
    m = {};
    m.postpartum_weeks = 2;
    CHECK(stage::extract_stage("I am 30 weeks pregnant", m, pack) == LifeStage::Postpartum);
    m = {};
    m.gestational_week = 20;
    CHECK(stage::extract_stage("my newborn baby", m, pack) == LifeStage::MaternalPregnant);

    m = {};
    m.gestational_week = 50;
    CHECK_THROWS_AS(m.validate(), InputError);
    m.gestational_week = 0;
    CHECK_THROWS_AS(m.validate(), InputError);
    m = {};
    m.newborn_age_days = -1;
    CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("text cues and precedence") {
    auto pack = stage::PatternPack::load(testing::data_dir() / "stage_patterns.jsonl");
    CHECK(stage::extract_stage("What foods increase iron?", {}, pack) == LifeStage::MaternalPregnant);
    CHECK(stage::extract_stage("pain since my c-section", {}, pack) == LifeStage::Postpartum);
    CHECK(stage::extract_stage("my newborn sleeps a lot", {}, pack) == LifeStage::Newborn);
    // Several stages in text: the most specific wins.
    CHECK(stage::extract_stage("two weeks after delivery my newborn has a rash", {}, pack) == LifeStage::Newborn);
    CHECK(stage::extract_stage("I was pregnant, now postpartum", {}, pack) == LifeStage::Postpartum);
}

TEST_CASE("every shipped stage pattern matches its example") {
    auto pack = stage::PatternPack::load(testing::data_dir() / "stage_patterns.jsonl");
    CHECK(pack.patterns().size() > 0);
    for (const auto& p : pack.patterns()) {
        if (!p.example) continue;
        CAPTURE(p.source);
        CHECK(stage::extract_stage(*p.example, {}, pack) == p.stage);
    }
}

TEST_CASE("concern tags") {
    auto pack = stage::PatternPack::load(testing::data_dir() / "stage_patterns.jsonl");
    auto tags = stage::extract_concerns("heavy bleeding and a fever", LifeStage::Postpartum, pack);
    CHECK(tags == stage::ConcernTags{stage::Concern::Bleeding, stage::Concern::Fever});
    CHECK(stage::extract_concerns("what is a good name", LifeStage::Newborn, pack).empty());
    for (auto c : {stage::Concern::Bleeding, stage::Concern::Wound, stage::Concern::Other})
        CHECK(stage::parse_concern(stage::to_string(c)) == c);
}

TEST_CASE("pattern pack rejects bad records") {
    std::istringstream bad_stage("{\"pattern\": \"x\", \"stage\": \"toddler\"}\n");
    CHECK_THROWS_AS(stage::PatternPack::load(bad_stage, "p"), ParseError);
    std::istringstream bad_tag("{\"keyword\": \"x\", \"concern_tag\": \"nope\"}\n");
    CHECK_THROWS_AS(stage::PatternPack::load(bad_tag, "p"), ParseError);
    std::istringstream bad_re("{\"pattern\": \"(x\", \"stage\": \"newborn\"}\n");
    CHECK_THROWS_AS(stage::PatternPack::load(bad_re, "p"), ParseError);
}
