// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "fixtures.hpp"

#include "mhrag/benchgen.hpp"
#include "mhrag/evalkit.hpp"
#include "mhrag/pipeline.hpp"
#include "mhrag/retrieval/fusion.hpp"
#include "mhrag/retrieval/hybrid.hpp"
#include "mhrag/triage.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace mhrag;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
};

std::string pct1(double x) { return fmt::format("{:.1f}", 100.0 * x); }

// --- 1 ----------------------------------------------------------------------

Outcome triage_table() {
    struct Row {
        const char* query;
        LifeStage stage;
        RoutingLevel level;
    };
    const std::vector<Row> rows = {
        {"Bleeding heavily since morning", LifeStage::MaternalPregnant, RoutingLevel::EmergencyNow},
        {"Baby has fever and is not feeding", LifeStage::Newborn, RoutingLevel::EmergencyNow},
        {"I can't go on anymore", LifeStage::MaternalPregnant, RoutingLevel::EmergencyNow},
        {"Breast is red and painful, have fever", LifeStage::Postpartum, RoutingLevel::SameDay},
        {"Baby moving less than usual", LifeStage::MaternalPregnant, RoutingLevel::SameDay},
        {"Mild back pain at 24 weeks", LifeStage::MaternalPregnant, RoutingLevel::Pass},
        {"What foods increase iron?", LifeStage::MaternalPregnant, RoutingLevel::Pass},
    };
    auto rt = testing::shipped_runtime();
    auto pipe = rt->make_pipeline();
    std::size_t exact = 0;
    std::string misses;
    for (const auto& r : rows) {
        pipeline::Trace trace;
        auto env = pipe.prepare(r.query, {}, trace);
        auto out = triage::pre_gen_triage(env.normalized, env.english, env.stage, env.concerns, rt->triage_engine());
        if (env.stage == r.stage && out.level == r.level)
            ++exact;
        else
            misses += fmt::format(" [{}: {} {}]", r.query, to_string(env.stage), to_string(out.level));
    }
    return {exact == rows.size(), fmt::format("{}/{} exact{}", exact, rows.size(), misses)};
}

// --- 2 ----------------------------------------------------------------------

Outcome triage_arithmetic() {
    eval::TriageConfusion c{78, 12, 9, 51};
    auto s = eval::triage_scores(c);
    if (!s.recall || !s.precision || !s.fn_rate || !s.fp_rate) return {false, "undefined metric"};
    auto got = fmt::format("{}/{}/{}/{}", pct1(*s.recall), pct1(*s.precision), pct1(*s.fn_rate), pct1(*s.fp_rate));
    return {got == "86.7/89.7/13.3/15.0", "recall/precision/FN/FP = " + got};
}

// --- 3 ----------------------------------------------------------------------

Outcome wilson() {
    auto a = eval::wilson_interval(2, 59);
    auto b = eval::wilson_interval(0, 59);
    auto got = fmt::format("[{}, {}] [{}, {}]", pct1(a.lo), pct1(a.hi), pct1(b.lo), pct1(b.hi));
    const std::string want = "[0.9, 11.7] [0.0, 6.1]";
    return {got == want, got + " (expected " + want + ")"};
}

// --- 4 ----------------------------------------------------------------------

std::vector<std::string> id_pool(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("c{:03}", i));
    return ids;
}

Outcome rrf_oracle() {
    std::mt19937_64 rng(4);
    auto pool = id_pool(120);
    std::size_t agree = 0;
    const std::size_t trials = 1000;
    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t n_lists = 1 + rng() % 5;
        std::vector<retrieval::ScoredList> lists;
        for (std::size_t l = 0; l < n_lists; ++l) {
            std::size_t len = rng() % 51;
            std::vector<std::string> ids = pool;
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(len);
            std::vector<retrieval::ScoredEntry> entries;
            // Coarse scores so ties are common.
            for (auto& id : ids) entries.push_back({id, double(rng() % 8)});
            lists.push_back(retrieval::ScoredList::from_unsorted(std::move(entries)));
        }
        std::map<std::string, double> brute;
        for (const auto& list : lists)
            for (std::size_t r = 0; r < list.size(); ++r) brute[list[r].chunk_id] += 1.0 / (double(r + 1) + 60.0);
        std::vector<std::pair<std::string, double>> expect(brute.begin(), brute.end());
        std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        auto fused = retrieval::rrf_fuse(lists, 60);
        bool same = fused.size() == expect.size();
        for (std::size_t i = 0; same && i < expect.size(); ++i)
            same = fused[i].chunk_id == expect[i].first && std::abs(fused[i].score - expect[i].second) < 1e-15;
        agree += same;
    }
    return {agree == trials, fmt::format("{}/{} instances agree", agree, trials)};
}

// --- 5 ----------------------------------------------------------------------

Outcome metrics_oracle() {
    std::mt19937_64 rng(5);
    auto pool = id_pool(60);
    const std::vector<std::size_t> ks = {1, 3, 5, 7, 10};
    std::size_t agree = 0;
    const std::size_t trials = 1000;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<std::string> ranking = pool;
        std::shuffle(ranking.begin(), ranking.end(), rng);
        ranking.resize(rng() % 31);
        std::set<std::string> direct;
        std::size_t nd = 1 + rng() % 8;
        while (direct.size() < nd) direct.insert(pool[rng() % pool.size()]);

        auto m = eval::retrieval_metrics(ranking, direct, ks);
        bool same = true;
        for (auto k : ks) {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < k && i < ranking.size(); ++i) hits += direct.count(ranking[i]);
            double recall = double(hits) / double(direct.size());
            double hit = hits ? 1.0 : 0.0;
            same = same && std::abs(m.recall_at.at(k) - recall) < 1e-12 && m.hit_at.at(k) == hit;
        }
        double rr = 0.0;
        for (std::size_t i = 0; i < ranking.size(); ++i)
            if (direct.count(ranking[i])) {
                rr = 1.0 / double(i + 1);
                break;
            }
        same = same && std::abs(m.mrr - rr) < 1e-12;
        agree += same;
    }
    return {agree == trials, fmt::format("{}/{} instances agree", agree, trials)};
}

// --- 6 ----------------------------------------------------------------------

Outcome bm25_reference() {
    const std::vector<std::vector<std::string>> docs = {
        {"iron", "tablets", "daily", "during", "pregnancy"},
        {"iron", "rich", "foods", "include", "lentils", "and", "iron", "fortified", "flour"},
        {"rest", "and", "fluids"},
    };
    std::string jsonl;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::string text;
        for (const auto& w : docs[i]) text += (text.empty() ? "" : " ") + w;
        jsonl += fmt::format(R"({{"id": "d{}", "text": "{}", "source_doc": "t", "language": "en"}})", i, text) + "\n";
    }
    auto store = testing::store_from_jsonl(jsonl);
    retrieval::RetrievalConfig cfg;
    auto index = retrieval::build_bm25_index(store, cfg);
    const std::vector<std::string> query = {"iron", "foods", "and", "pregnancy"};
    auto got = retrieval::bm25_retrieve(index, "iron foods and pregnancy");

    // Textbook Okapi BM25 with the non-negative idf variant.
    const double k1 = 1.2, b = 0.75, N = double(docs.size());
    double avgdl = 0;
    for (const auto& d : docs) avgdl += double(d.size());
    avgdl /= N;
    std::map<std::string, double> expect;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = 0;
        for (const auto& q : query) {
            double df = 0;
            for (const auto& d : docs) df += std::count(d.begin(), d.end(), q) > 0;
            double tf = double(std::count(docs[i].begin(), docs[i].end(), q));
            if (tf == 0) continue;
            double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * double(docs[i].size()) / avgdl));
        }
        if (s > 0) expect[fmt::format("d{}", i)] = s;
    }
    double worst = 0;
    bool ok = got.size() == expect.size();
    for (const auto& e : got) {
        auto it = expect.find(e.chunk_id);
        if (it == expect.end()) {
            ok = false;
            continue;
        }
        worst = std::max(worst, std::abs(e.score - it->second));
    }
    ok = ok && worst <= 1e-9;
    return {ok, fmt::format("{} docs scored, max |diff| = {:.3g}", got.size(), worst)};
}

// --- 7 ----------------------------------------------------------------------

Outcome planted_coverage() {
    auto f = testing::planted_fixture();
    retrieval::RetrievalContext ctx;
    ctx.store = &f.store;
    ctx.sparse = &f.sparse;
    ctx.dense = &f.dense;
    ctx.embedder = f.embedder.get();
    ctx.config.k_rerank = 5;
    ctx.config.top_k = 5;
    auto rr = retrieval::retrieve_and_rerank(f.query, f.query, LifeStage::Postpartum, {}, ctx);
    auto has_both = [](const std::vector<std::string>& ids) {
        return std::count(ids.begin(), ids.end(), "p-lex") && std::count(ids.begin(), ids.end(), "p-sem");
    };
    auto fused = rr.evidence.ids();
    auto dense = rr.trace.dense.truncated(5).ids();
    auto sparse = rr.trace.sparse.truncated(5).ids();
    bool ok = has_both(fused) && !has_both(dense) && !has_both(sparse);
    return {ok, fmt::format("fused top-5 both={} dense top-5 both={} bm25 top-5 both={}", has_both(fused),
                            has_both(dense), has_both(sparse))};
}

// --- 8 ----------------------------------------------------------------------

double brute_qwk(const std::vector<int>& a, const std::vector<int>& b, int k) {
    std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) o[a[i] - 1][b[i] - 1] += 1;
    std::vector<double> ra(k, 0), rb(k, 0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            ra[i] += o[i][j];
            rb[j] += o[i][j];
        }
    double n = double(a.size()), num = 0, den = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double w = double((i - j) * (i - j)) / double((k - 1) * (k - 1));
            num += w * o[i][j];
            den += w * ra[i] * rb[j] / n;
        }
    return 1.0 - num / den;
}

Outcome qwk_oracle() {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> r3(1, 3);
    double worst = 0;
    bool self_ok = true;
    for (int t = 0; t < 100; ++t) {
        std::vector<int> a(200), b(200);
        for (auto& x : a) x = r3(rng);
        // Correlated half the time so kappa spans a useful range.
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = (t % 2 && rng() % 3) ? a[i] : r3(rng);
        worst = std::max(worst, std::abs(eval::qwk(a, b, 3).kappa - brute_qwk(a, b, 3)));
        auto self = eval::qwk(a, a, 3);
        self_ok = self_ok && std::abs(self.kappa - 1.0) < 1e-12 && !self.degenerate;
    }
    return {worst <= 1e-12 && self_ok, fmt::format("max |diff| = {:.3g}, self-agreement kappa=1: {}", worst, self_ok)};
}

// --- 9 ----------------------------------------------------------------------

double t_density(double x, double df) {
    double c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
    return std::exp(c - (df + 1) / 2 * std::log1p(x * x / df));
}

// Composite Gauss-Legendre (5 points) over [0, |t|]; p = 1 - 2 * integral.
double quadrature_p(double t, double df) {
    static const double xs[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                 0.9061798459386640};
    static const double ws[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                 0.2369268850561891};
    double upper = std::abs(t);
    const int panels = 4000;
    double h = upper / panels, sum = 0;
    for (int p = 0; p < panels; ++p) {
        double mid = (p + 0.5) * h;
        for (int i = 0; i < 5; ++i) sum += ws[i] * t_density(mid + xs[i] * h / 2, df) * h / 2;
    }
    return std::max(0.0, 1.0 - 2.0 * sum);
}

Outcome ttest_oracle() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0;
    for (int f = 0; f < 100; ++f) {
        std::size_t n = 3 + rng() % 40;
        double shift = (f % 4) * 0.25;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = 2.0 + noise(rng);
            b[i] = a[i] - shift + 0.8 * noise(rng);
        }
        double mean = 0, ss = 0;
        for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
        mean /= double(n);
        for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
        double t = mean / std::sqrt(ss / double(n - 1) / double(n));
        auto got = eval::paired_ttest(a, b);
        worst = std::max(worst, std::abs(got.p_two_sided - quadrature_p(t, double(n - 1))));
        worst = std::max(worst, std::abs(got.t - t) / std::max(1.0, std::abs(t)));
    }
    return {worst <= 1e-6, fmt::format("100 fixtures, max |diff| = {:.3g}", worst)};
}

// --- 10 ---------------------------------------------------------------------

Outcome pipeline_invariants() {
    auto rt = testing::shipped_runtime();
    std::vector<std::string> triggers, benign = {
        "how much iron should I take",
        "is it safe to drink tea",
        "when should breastfeeding start",
        "what vaccines does my baby need",
        "how many antenatal visits are recommended",
        "can I exercise in the second trimester",
        "mild back pain at 24 weeks",
        "my baby sleeps a lot during the day",
        "what should I eat after delivery",
        "nipples are sore when feeding",
    };
    for (const auto& r : rt->triage_engine().rules.rules())
        if (r.example) triggers.push_back(*r.example);
    const std::vector<std::string> stage_cues = {"", "I am 30 weeks pregnant, ", "two weeks after delivery, ",
                                                 "my 5 days old baby: ", "postpartum: "};
    const std::vector<std::string> negations = {"no ", "I do not have ", "there is no ", "never had "};

    std::mt19937_64 rng(10);
    const std::vector<std::string> labels = {"NOW-MH", "NOW-DV", "NOW-MED", "SAME-DAY"};
    auto plain = rt->make_pipeline();

    std::size_t violations = 0, escalated = 0, passed = 0, post_checked = 0;
    std::string first_violation;
    auto violate = [&](const std::string& q, const std::string& why) {
        if (!violations++) first_violation = q + ": " + why;
    };
    for (int i = 0; i < 500; ++i) {
        std::string q = stage_cues[rng() % stage_cues.size()];
        switch (i % 4) {
        case 0: q += triggers[rng() % triggers.size()]; break;
        case 1: q += negations[rng() % negations.size()] + triggers[rng() % triggers.size()]; break;
        case 2: q += benign[rng() % benign.size()]; break;
        default: q += benign[rng() % benign.size()] + " and " + triggers[rng() % triggers.size()]; break;
        }
        if (rng() % 5 == 0) q = "  " + q + "!!  ";

        auto resp = plain.run(q);
        const auto& tr = resp.trace;
        const auto* tri = tr.step("triage");
        if (!tri) {
            violate(q, "no triage step");
            continue;
        }
        bool escalate = tri->detail.at("level") != "PASS";
        if (escalate) {
            ++escalated;
            if (tr.has_step("retrieval") || tr.has_step("generation")) violate(q, "retrieval ran on escalation");
            if (!resp.sources.empty()) violate(q, "template with sources");
            if (resp.kind != pipeline::ResponseKind::Template) violate(q, "escalation not templated");
        } else {
            ++passed;
            if (!tr.has_step("retrieval") || resp.kind != pipeline::ResponseKind::Informational)
                violate(q, "PASS did not reach generation");
            // Same query, but the generator emits an escalation label first.
            auto label = labels[rng() % labels.size()];
            auto gen = std::make_shared<pipeline::ScriptedGenerator>(label + "\nLEAKED BODY TEXT [nut-01]");
            auto scripted = rt->make_pipeline(std::nullopt, gen).run(q);
            ++post_checked;
            if (std::string(to_string(scripted.label)) != label) violate(q, "post-check kept PASS");
            if (!scripted.sources.empty()) violate(q, "post-check template with sources");
            if (scripted.text.find("LEAKED") != std::string::npos) violate(q, "generated body leaked");
        }
    }
    return {violations == 0 && escalated > 0 && passed > 0,
            fmt::format("500 queries ({} escalated, {} pass, {} post-checked), {} violations{}", escalated, passed,
                        post_checked, violations, first_violation.empty() ? "" : "; first: " + first_violation)};
}

// --- 11 ---------------------------------------------------------------------

Outcome benchgen_determinism() {
    auto rt = testing::shipped_runtime();
    benchgen::KeywordQuestionGenerator qgen;
    benchgen::OverlapLabeler labeler;
    benchgen::BuildOptions opts;
    opts.n_items = 10;
    opts.seed = 42;
    benchgen::DenseRetriever dr{&rt->dense(), &rt->embedder()};
    auto a = benchgen::build_benchmark(rt->store(), dr, qgen, labeler, opts).to_json().dump(1);
    auto bench = benchgen::build_benchmark(rt->store(), dr, qgen, labeler, opts);
    auto b = bench.to_json().dump(1);
    bool all_two = bench.items.size() == 10;
    for (const auto& it : bench.items) all_two = all_two && it.direct_count() >= 2;
    auto stats = benchgen::benchmark_stats(bench);
    return {a == b && all_two,
            fmt::format("byte-identical={}, {} items, DIRECT per item mean {:.1f} range {}-{}", a == b,
                        bench.items.size(), stats.mean_direct, stats.min_direct, stats.max_direct)};
}

// --- 12 ---------------------------------------------------------------------

Outcome negation_guard() {
    auto rt = testing::shipped_runtime();
    const auto& engine = rt->triage_engine();
    std::size_t total = 0, ok = 0;
    std::string misses;
    for (const auto& rule : engine.rules.rules()) {
        if (rule.level != RoutingLevel::EmergencyNow) continue;
        if (!rule.example) {
            misses += " [" + rule.id + ": no example]";
            ++total;
            continue;
        }
        for (auto stage : rule.stages) {
            ++total;
            auto q = "no " + *rule.example;
            auto pos = triage::pre_gen_triage(*rule.example, *rule.example, stage, {}, engine);
            auto neg = triage::pre_gen_triage(q, q, stage, {}, engine);
            // The bare example must fire, otherwise the negated check proves nothing.
            if (pos.level == RoutingLevel::EmergencyNow && neg.level == RoutingLevel::Pass)
                ++ok;
            else
                misses += fmt::format(" [{} / {}: {} -> {}]", rule.id, to_string(stage), to_string(pos.level),
                                      to_string(neg.level));
        }
    }
    return {total > 0 && ok == total, fmt::format("{}/{} rule-stage pairs negate to PASS{}", ok, total, misses)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "triage fixture reproduction", 1.0, triage_table},
        {2, "triage metric arithmetic", 1.0, triage_arithmetic},
        {3, "Wilson intervals", 1.0, wilson},
        {4, "RRF oracle equivalence", 10.0, rrf_oracle},
        {5, "retrieval metric oracle equivalence", 10.0, metrics_oracle},
        {6, "BM25 reference check", 1.0, bm25_reference},
        {7, "hybrid coverage on planted fixture", 1.0, planted_coverage},
        {8, "QWK oracle", 5.0, qwk_oracle},
        {9, "paired t-test p-values", 5.0, ttest_oracle},
        {10, "pipeline safety invariants", 30.0, pipeline_invariants},
        {11, "benchmark generator determinism", 10.0, benchgen_determinism},
        {12, "negation guard", 1.0, negation_guard},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = out.ok && secs < c.limit_s;
        if (out.ok && !ok) out.detail += fmt::format("; over the {:.0f} s limit", c.limit_s);
        failed += !ok;
        fmt::print("{} AC{:02} {}: {} ({:.3f} s)\n", ok ? "PASS" : "FAIL", c.id, c.name, out.detail, secs);
    }
    fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
