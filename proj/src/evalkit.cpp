#include "mhrag/evalkit.hpp"

#include "mhrag/errors.hpp"
#include "mhrag/jsonl.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace mhrag::eval {

// ---------------------------------------------------------------------------
// Retrieval

RetrievalMetrics retrieval_metrics(const std::vector<std::string>& ranked_ids, const std::set<std::string>& direct,
                                   const std::vector<std::size_t>& ks) {
    if (direct.empty()) throw InputError("retrieval_metrics: empty DIRECT set");
    RetrievalMetrics m;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < ranked_ids.size(); ++i)
        if (direct.contains(ranked_ids[i])) {
            first = i + 1;
            break;
        }
    m.mrr = first ? 1.0 / double(*first) : 0.0;
    for (auto k : ks) {
        if (k == 0) throw InputError("retrieval_metrics: K must be positive");
        std::set<std::string> seen;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, ranked_ids.size()); ++i)
            if (direct.contains(ranked_ids[i]) && seen.insert(ranked_ids[i]).second) ++hits;
        m.recall_at[k] = double(hits) / double(direct.size());
        m.hit_at[k] = hits > 0 ? 1.0 : 0.0;
    }
    return m;
}

RetrievalMetrics retrieval_metrics(const retrieval::ScoredList& ranked, const std::set<std::string>& direct,
                                   const std::vector<std::size_t>& ks) {
    return retrieval_metrics(ranked.ids(), direct, ks);
}

RetrievalMetrics mean_metrics(const std::vector<RetrievalMetrics>& per_query) {
    if (per_query.empty()) throw InputError("mean_metrics: no queries");
    RetrievalMetrics out;
    for (const auto& [k, _] : per_query.front().recall_at) {
        out.recall_at[k] = 0.0;
        out.hit_at[k] = 0.0;
    }
    for (const auto& m : per_query) {
        if (m.recall_at.size() != out.recall_at.size()) throw InputError("mean_metrics: K sets differ");
        for (const auto& [k, v] : m.recall_at) {
            auto it = out.recall_at.find(k);
            if (it == out.recall_at.end()) throw InputError("mean_metrics: K sets differ");
            it->second += v;
            out.hit_at[k] += m.hit_at.at(k);
        }
        out.mrr += m.mrr;
    }
    const double n = double(per_query.size());
    for (auto& [k, v] : out.recall_at) v /= n;
    for (auto& [k, v] : out.hit_at) v /= n;
    out.mrr /= n;
    return out;
}

nlohmann::json RetrievalMetrics::to_json() const {
    nlohmann::json r = nlohmann::json::object(), h = nlohmann::json::object();
    for (const auto& [k, v] : recall_at) r[std::to_string(k)] = v;
    for (const auto& [k, v] : hit_at) h[std::to_string(k)] = v;
    return {{"recall_at", r}, {"hit_at", h}, {"mrr", mrr}};
}

// ---------------------------------------------------------------------------
// Triage

TriageScores triage_scores(const TriageConfusion& c) {
    TriageScores s;
    if (c.tp + c.fn > 0) {
        s.recall = double(c.tp) / double(c.tp + c.fn);
        s.fn_rate = double(c.fn) / double(c.tp + c.fn);
    } else {
        s.errors.push_back("recall and fn_rate undefined: no positive gold items");
    }
    if (c.tp + c.fp > 0)
        s.precision = double(c.tp) / double(c.tp + c.fp);
    else
        s.errors.push_back("precision undefined: nothing predicted positive");
    if (c.fp + c.tn > 0)
        s.fp_rate = double(c.fp) / double(c.fp + c.tn);
    else
        s.errors.push_back("fp_rate undefined: no negative gold items");
    return s;
}

nlohmann::json TriageScores::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"recall", opt(recall)},
            {"precision", opt(precision)},
            {"fn_rate", opt(fn_rate)},
            {"fp_rate", opt(fp_rate)},
            {"errors", errors}};
}

TriageConfusion confusion(const std::vector<RoutingLevel>& predicted, const std::vector<RoutingLevel>& gold) {
    if (predicted.size() != gold.size()) throw InputError("confusion: prediction and gold lengths differ");
    TriageConfusion c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool p = predicted[i] != RoutingLevel::Pass;
        const bool g = gold[i] != RoutingLevel::Pass;
        if (p && g) ++c.tp;
        else if (!p && g) ++c.fn;
        else if (p && !g) ++c.fp;
        else ++c.tn;
    }
    return c;
}

std::map<RoutingLevel, ClassRecall> severity_breakdown(const std::vector<RoutingLevel>& predicted,
                                                       const std::vector<RoutingLevel>& gold) {
    if (predicted.size() != gold.size()) throw InputError("severity_breakdown: prediction and gold lengths differ");
    std::map<RoutingLevel, ClassRecall> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto& cr = out[gold[i]];
        ++cr.total;
        const bool escalated = predicted[i] != RoutingLevel::Pass;
        if (gold[i] == RoutingLevel::Pass ? !escalated : escalated) ++cr.correct;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kappa

KappaResult qwk(const std::vector<int>& a, const std::vector<int>& b, int scale) {
    if (a.size() != b.size()) throw InputError("qwk: rating vectors differ in length");
    if (a.size() < 2) throw InputError("qwk: at least two paired ratings required");
    if (scale < 2) throw InputError("qwk: scale needs at least two categories");
    const auto k = static_cast<std::size_t>(scale);
    std::vector<double> obs(k * k, 0.0), ma(k, 0.0), mb(k, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 1 || a[i] > scale || b[i] < 1 || b[i] > scale)
            throw InputError(fmt::format("qwk: rating outside 1..{}", scale));
        auto x = std::size_t(a[i] - 1), y = std::size_t(b[i] - 1);
        obs[x * k + y] += 1.0;
        ma[x] += 1.0;
        mb[y] += 1.0;
    }
    const double n = double(a.size());
    const double denom_w = double((k - 1) * (k - 1));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const double d = double(i) - double(j);
            const double w = d * d / denom_w;
            num += w * obs[i * k + j] / n;
            den += w * (ma[i] / n) * (mb[j] / n);
        }
    if (den == 0.0) return {1.0, true};
    return {1.0 - num / den, false};
}

// ---------------------------------------------------------------------------
// Ratings

void RatingSet::add(RatingRecord r) {
    if (r.item_id.empty() || r.rater_id.empty() || r.dimension.empty())
        throw InputError("rating record needs item_id, rater_id and dimension");
    if (!std::isfinite(r.score) || r.score < 1.0 || r.score > double(scale_))
        throw InputError(fmt::format("score {} for item {} outside 1..{}", r.score, r.item_id, scale_));
    if (!keys_.emplace(r.item_id, r.rater_id, r.dimension).second)
        throw InputError("duplicate rating for (" + r.item_id + ", " + r.rater_id + ", " + r.dimension + ")");
    records_.push_back(std::move(r));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

double parse_score(const std::string& s, const std::string& source, std::size_t line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source, line, "score '" + s + "' is not a number");
    }
}

}  // namespace

RatingSet RatingSet::load_csv(std::istream& in, const std::string& source, int scale) {
    RatingSet set(scale);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_csv_line(line);
        if (col.empty()) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
            for (const char* need : {"item_id", "rater_id", "dimension", "score"})
                if (!col.contains(need)) throw ParseError(source, lineno, std::string("header lacks column ") + need);
            continue;
        }
        if (fields.size() != col.size())
            throw ParseError(source, lineno, fmt::format("expected {} fields, got {}", col.size(), fields.size()));
        try {
            set.add({fields[col["item_id"]], fields[col["rater_id"]], fields[col["dimension"]],
                     parse_score(fields[col["score"]], source, lineno)});
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    if (col.empty()) throw InputError(source + ": empty ratings file");
    return set;
}

RatingSet RatingSet::load_jsonl(std::istream& in, const std::string& source, int scale) {
    RatingSet set(scale);
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        auto item = jsonl::require_string(rec, "item_id", source, line);
        auto rater = jsonl::require_string(rec, "rater_id", source, line);
        auto dim = jsonl::require_string(rec, "dimension", source, line);
        auto it = rec.find("score");
        if (it == rec.end() || !it->is_number()) throw ParseError(source, line, "score must be a number");
        try {
            set.add({item, rater, dim, it->get<double>()});
        } catch (const InputError& e) {
            throw ParseError(source, line, e.what());
        }
    });
    return set;
}

RatingSet RatingSet::load(const std::filesystem::path& path, int scale) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open ratings file " + path.string());
    if (path.extension() == ".csv") return load_csv(in, path.string(), scale);
    return load_jsonl(in, path.string(), scale);
}

std::set<std::string> RatingSet::dimensions() const {
    std::set<std::string> out;
    for (const auto& r : records_) out.insert(r.dimension);
    return out;
}

std::set<std::string> RatingSet::raters(const std::string& dimension) const {
    std::set<std::string> out;
    for (const auto& r : records_)
        if (r.dimension == dimension) out.insert(r.rater_id);
    return out;
}

std::map<std::string, std::map<std::string, double>> RatingSet::by_item(const std::string& dimension) const {
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& r : records_)
        if (r.dimension == dimension) out[r.item_id][r.rater_id] = r.score;
    return out;
}

// ---------------------------------------------------------------------------
// Agreement

namespace {

int as_category(double s) {
    double r = std::round(s);
    if (std::abs(s - r) > 1e-9) throw InputError(fmt::format("qwk needs integer ratings, got {}", s));
    return int(r);
}

}  // namespace

double weighted_kappa_mean(const std::vector<PairKappa>& pairs) {
    double num = 0.0, den = 0.0;
    for (const auto& p : pairs) {
        num += double(p.overlap) * p.kappa.kappa;
        den += double(p.overlap);
    }
    if (den == 0.0) throw InputError("no rater pair with sufficient overlap");
    return num / den;
}

PairwiseKappa pairwise_qwk_weighted(const RatingSet& ratings, const std::string& dimension, std::size_t min_overlap) {
    auto raters = ratings.raters(dimension);
    if (raters.size() < 2) throw InputError("dimension '" + dimension + "' needs at least two raters");
    auto items = ratings.by_item(dimension);
    std::vector<std::string> rv(raters.begin(), raters.end());
    PairwiseKappa out;
    for (std::size_t i = 0; i < rv.size(); ++i)
        for (std::size_t j = i + 1; j < rv.size(); ++j) {
            std::vector<int> a, b;
            for (const auto& [item, by_rater] : items) {
                auto ia = by_rater.find(rv[i]), ib = by_rater.find(rv[j]);
                if (ia == by_rater.end() || ib == by_rater.end()) continue;
                a.push_back(as_category(ia->second));
                b.push_back(as_category(ib->second));
            }
            if (a.size() < std::max<std::size_t>(min_overlap, 2)) continue;
            out.per_pair.push_back({rv[i], rv[j], a.size(), qwk(a, b, ratings.scale())});
        }
    out.aggregate = weighted_kappa_mean(out.per_pair);
    return out;
}

nlohmann::json PairwiseKappa::to_json() const {
    auto pairs = nlohmann::json::array();
    for (const auto& p : per_pair)
        pairs.push_back({{"rater_a", p.rater_a},
                         {"rater_b", p.rater_b},
                         {"overlap", p.overlap},
                         {"kappa", p.kappa.kappa},
                         {"degenerate", p.kappa.degenerate}});
    return {{"aggregate", aggregate}, {"per_pair", pairs}};
}

nlohmann::json Agreement::to_json() const { return {{"mae", mae}, {"frac_within", frac_within}, {"n", n}}; }

namespace {

Agreement finish(const std::vector<double>& diffs, double threshold) {
    if (diffs.empty()) throw InputError("agreement: no overlapping items");
    Agreement a;
    a.n = diffs.size();
    std::size_t within = 0;
    for (double d : diffs) {
        a.mae += d;
        // tolerance keeps the boundary inclusive under floating-point means
        if (d <= threshold + 1e-12) ++within;
    }
    a.mae /= double(a.n);
    a.frac_within = double(within) / double(a.n);
    return a;
}

double mean_of(const std::map<std::string, double>& m) {
    double s = 0.0;
    for (const auto& [_, v] : m) s += v;
    return s / double(m.size());
}

}  // namespace

Agreement judge_agreement(const std::map<std::string, double>& judge, const RatingSet& experts,
                          const std::string& dimension, double threshold) {
    std::vector<double> diffs;
    for (const auto& [item, by_rater] : experts.by_item(dimension)) {
        auto it = judge.find(item);
        if (it == judge.end()) continue;
        diffs.push_back(std::abs(it->second - mean_of(by_rater)));
    }
    return finish(diffs, threshold);
}

Agreement leave_one_out_agreement(const RatingSet& experts, const std::string& dimension, double threshold) {
    std::vector<double> diffs;
    for (const auto& [item, by_rater] : experts.by_item(dimension)) {
        if (by_rater.size() < 2) continue;
        double total = 0.0;
        for (const auto& [_, v] : by_rater) total += v;
        for (const auto& [_, v] : by_rater) {
            double others = (total - v) / double(by_rater.size() - 1);
            diffs.push_back(std::abs(v - others));
        }
    }
    return finish(diffs, threshold);
}

int round_half_up(double x, int scale) {
    int r = int(std::floor(x + 0.5 + 1e-12));
    return std::clamp(r, 1, scale);
}

KappaResult judge_consensus_qwk(const std::map<std::string, double>& judge, const RatingSet& experts,
                                const std::string& dimension) {
    std::vector<int> a, b;
    for (const auto& [item, by_rater] : experts.by_item(dimension)) {
        auto it = judge.find(item);
        if (it == judge.end()) continue;
        a.push_back(round_half_up(it->second, experts.scale()));
        b.push_back(round_half_up(mean_of(by_rater), experts.scale()));
    }
    return qwk(a, b, experts.scale());
}

DimensionMapping DimensionMapping::from_json(const nlohmann::json& j) {
    DimensionMapping m;
    try {
        if (j.value("combiner", std::string("mean")) != "mean") throw InputError("only the mean combiner is supported");
        for (auto& [dim, crit] : j.at("dimensions").items()) {
            auto v = crit.get<std::vector<std::string>>();
            if (v.empty()) throw InputError("dimension '" + dim + "' maps to no criteria");
            m.dimensions[dim] = std::move(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed dimension mapping: ") + e.what());
    }
    return m;
}

DimensionMapping DimensionMapping::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(jsonl::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::map<std::string, double> DimensionMapping::combine(
    const std::map<std::string, std::map<std::string, double>>& judge, const std::string& dimension) const {
    auto it = dimensions.find(dimension);
    if (it == dimensions.end()) throw InputError("no mapping for expert dimension '" + dimension + "'");
    std::map<std::string, double> out;
    for (const auto& [item, crit] : judge) {
        double s = 0.0;
        bool complete = true;
        for (const auto& c : it->second) {
            auto ci = crit.find(c);
            if (ci == crit.end()) {
                complete = false;
                break;
            }
            s += ci->second;
        }
        if (complete) out[item] = s / double(it->second.size());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

Interval wilson_interval(std::size_t successes, std::size_t n, double confidence) {
    if (n == 0) throw InputError("wilson_interval: n must be positive");
    if (successes > n) throw InputError("wilson_interval: successes exceed n");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("wilson_interval: confidence must be in (0, 1)");
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - confidence) / 2.0);
    const double nn = double(n), p = double(successes) / nn, z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double student_t_two_sided(double t, double df) {
    if (!(df > 0.0)) throw InputError("student_t_two_sided: df must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

TTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InputError("paired_ttest: lengths differ");
    if (a.size() < 2) throw InputError("paired_ttest: at least two pairs required");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    TTest r;
    r.df = n - 1;
    const double sd = std::sqrt(ss / double(n - 1));
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) {
        r.zero_differences = true;
        return r;
    }
    if (sd == 0.0) {
        r.zero_variance = true;
        r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_two_sided = 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(double(n)));
    r.p_two_sided = student_t_two_sided(r.t, double(r.df));
    return r;
}

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

JudgeTable aggregate_judge_scores(const JudgeScores& scores) {
    if (scores.empty()) throw InputError("aggregate_judge_scores: no systems");
    JudgeTable table;
    const auto& [ref_name, ref] = *scores.begin();
    for (const auto& [sys, crit] : scores) {
        table.systems.push_back(sys);
        if (crit.size() != ref.size())
            throw InputError("system '" + sys + "' covers different criteria than '" + ref_name + "'");
        for (const auto& [c, per_query] : crit) {
            auto rc = ref.find(c);
            if (rc == ref.end()) throw InputError("criterion '" + c + "' missing for system '" + ref_name + "'");
            if (per_query.size() != rc->second.size() ||
                !std::equal(per_query.begin(), per_query.end(), rc->second.begin(),
                            [](const auto& x, const auto& y) { return x.first == y.first; }))
                throw InputError("system '" + sys + "' criterion '" + c + "': query ids do not align");
            if (per_query.empty()) throw InputError("criterion '" + c + "' has no scores");
        }
    }
    table.n_queries = ref.empty() ? 0 : ref.begin()->second.size();
    for (const auto& [c, ref_scores] : ref) {
        CriterionRow row;
        row.criterion = c;
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [sys, crit] : scores) {
            const auto& pq = crit.at(c);
            double s = 0.0;
            for (const auto& [_, v] : pq) s += v;
            row.means[sys] = s / double(pq.size());
            ranked.emplace_back(row.means[sys], sys);
        }
        std::sort(ranked.begin(), ranked.end());
        row.best = ranked[0].second;
        if (ranked.size() > 1) {
            row.runner_up = ranked[1].second;
            std::vector<double> a, b;
            for (const auto& [q, v] : scores.at(*row.best).at(c)) {
                a.push_back(v);
                b.push_back(scores.at(*row.runner_up).at(c).at(q));
            }
            if (a.size() >= 2) {
                row.test = paired_ttest(a, b);
                row.stars = significance_stars(row.test->p_two_sided);
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::json JudgeTable::to_json() const {
    auto rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j{{"criterion", r.criterion}, {"means", r.means}, {"stars", r.stars}};
        if (r.best) j["best"] = *r.best;
        if (r.runner_up) j["runner_up"] = *r.runner_up;
        if (r.test) {
            j["t"] = std::isfinite(r.test->t) ? nlohmann::json(r.test->t)
                                               : nlohmann::json(r.test->t > 0 ? "+inf" : "-inf");
            j["p"] = r.test->p_two_sided;
            j["df"] = r.test->df;
        }
        rows_json.push_back(std::move(j));
    }
    return {{"systems", systems}, {"n_queries", n_queries}, {"lower_is_better", true}, {"rows", rows_json}};
}

std::string JudgeTable::to_text() const {
    std::string out = fmt::format("{:<24}", "criterion");
    for (const auto& s : systems) out += fmt::format(" {:>14}", s);
    out += "\n";
    for (const auto& r : rows) {
        out += fmt::format("{:<24}", r.criterion);
        for (const auto& s : systems) {
            std::string cell = fmt::format("{:.2f}", r.means.at(s));
            if (r.best && *r.best == s) cell += r.stars;
            out += fmt::format(" {:>14}", cell);
        }
        out += "\n";
    }
    out += fmt::format("n={} queries; lower is better; * p<0.05, ** p<0.01, *** p<0.001 (best vs runner-up)\n",
                       n_queries);
    return out;
}

JudgeScores load_judge_scores(std::istream& in, const std::string& source) {
    JudgeScores out;
    jsonl::for_each_record(in, source, [&](const jsonl::Json& rec, std::size_t line) {
        auto sys = jsonl::require_string(rec, "system", source, line);
        auto q = jsonl::require_string(rec, "query_id", source, line);
        auto c = jsonl::require_string(rec, "criterion", source, line);
        auto it = rec.find("score");
        if (it == rec.end() || !it->is_number()) throw ParseError(source, line, "score must be a number");
        if (!out[sys][c].emplace(q, it->get<double>()).second)
            throw ParseError(source, line, "duplicate score for (" + sys + ", " + q + ", " + c + ")");
    });
    return out;
}

JudgeScores load_judge_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open judge scores " + path.string());
    return load_judge_scores(in, path.string());
}

// ---------------------------------------------------------------------------
// Text tables

std::string format_confusion(const TriageConfusion& c, const TriageScores& s) {
    auto pct = [](const std::optional<double>& v) { return v ? fmt::format("{:.1f}%", *v * 100.0) : std::string("n/a"); };
    std::string out;
    out += fmt::format("{:<22} {:>14} {:>14}\n", "", "pred escalate", "pred PASS");
    out += fmt::format("{:<22} {:>14} {:>14}\n", "gold escalate", c.tp, c.fn);
    out += fmt::format("{:<22} {:>14} {:>14}\n", "gold PASS", c.fp, c.tn);
    out += fmt::format("recall {}  precision {}  FN rate {}  FP rate {}  (n={})\n", pct(s.recall), pct(s.precision),
                       pct(s.fn_rate), pct(s.fp_rate), c.total());
    return out;
}

std::string format_retrieval(const std::map<std::string, RetrievalMetrics>& by_system) {
    if (by_system.empty()) return "";
    const auto& ks = by_system.begin()->second.recall_at;
    std::size_t w = 6;
    for (const auto& [name, _] : by_system) w = std::max(w, name.size());
    std::string out = fmt::format("{:<{}}", "system", w);
    for (const auto& [k, _] : ks) out += fmt::format(" {:>7}", fmt::format("R@{}", k));
    for (const auto& [k, _] : ks) out += fmt::format(" {:>7}", fmt::format("Hit@{}", k));
    out += fmt::format(" {:>7}\n", "MRR");
    for (const auto& [name, m] : by_system) {
        out += fmt::format("{:<{}}", name, w);
        for (const auto& [k, v] : m.recall_at) out += fmt::format(" {:>7.3f}", v);
        for (const auto& [k, v] : m.hit_at) out += fmt::format(" {:>7.3f}", v);
        out += fmt::format(" {:>7.3f}\n", m.mrr);
    }
    return out;
}

}  // namespace mhrag::eval
