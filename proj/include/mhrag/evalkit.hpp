#pragma once

#include "mhrag/retrieval/scored_list.hpp"
#include "mhrag/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <string>
#include <vector>

namespace mhrag::eval {

// ---------------------------------------------------------------------------
// Retrieval

struct RetrievalMetrics {
    std::map<std::size_t, double> recall_at;
    std::map<std::size_t, double> hit_at;
    double mrr = 0.0;

    nlohmann::json to_json() const;
};

inline const std::vector<std::size_t> kDefaultKs = {1, 3, 5, 7, 10};

/// Throws InputError when `direct` is empty or a K is zero.
RetrievalMetrics retrieval_metrics(const std::vector<std::string>& ranked_ids, const std::set<std::string>& direct,
                                   const std::vector<std::size_t>& ks = kDefaultKs);
RetrievalMetrics retrieval_metrics(const retrieval::ScoredList& ranked, const std::set<std::string>& direct,
                                   const std::vector<std::size_t>& ks = kDefaultKs);

/// Macro average; every entry must share the same K set.
RetrievalMetrics mean_metrics(const std::vector<RetrievalMetrics>& per_query);

// ---------------------------------------------------------------------------
// Triage

/// Escalation (EMERGENCY_NOW or SAME_DAY) is the positive class.
struct TriageConfusion {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    std::size_t total() const { return tp + fn + fp + tn; }
};

/// Metrics whose denominator is zero are left empty; `errors` says why.
struct TriageScores {
    std::optional<double> recall, precision, fn_rate, fp_rate;
    std::vector<std::string> errors;

    nlohmann::json to_json() const;
};

TriageScores triage_scores(const TriageConfusion& c);

TriageConfusion confusion(const std::vector<RoutingLevel>& predicted, const std::vector<RoutingLevel>& gold);

struct ClassRecall {
    std::size_t correct = 0;
    std::size_t total = 0;
    double recall() const { return total ? double(correct) / double(total) : 0.0; }
};

/// Per gold class: escalation classes count any escalated prediction as
/// correct, PASS counts PASS predictions. Empty classes are absent.
std::map<RoutingLevel, ClassRecall> severity_breakdown(const std::vector<RoutingLevel>& predicted,
                                                       const std::vector<RoutingLevel>& gold);

// ---------------------------------------------------------------------------
// Agreement

struct KappaResult {
    double kappa = 0.0;
    bool degenerate = false;  // zero expected disagreement; kappa set to 1
};

/// Quadratic-weighted Cohen's kappa over ratings in 1..scale.
KappaResult qwk(const std::vector<int>& a, const std::vector<int>& b, int scale);

struct RatingRecord {
    std::string item_id;
    std::string rater_id;
    std::string dimension;
    double score = 0.0;
};

/// Validated collection: scores inside [1, scale] and unique (item, rater, dimension).
class RatingSet {
public:
    explicit RatingSet(int scale = 3) : scale_(scale) {}
    void add(RatingRecord r);

    /// CSV with a header naming item_id, rater_id, dimension, score (any
    /// order), or JSONL with the same keys. Chosen by file extension.
    static RatingSet load(const std::filesystem::path& path, int scale = 3);
    static RatingSet load_csv(std::istream& in, const std::string& source, int scale = 3);
    static RatingSet load_jsonl(std::istream& in, const std::string& source, int scale = 3);

    int scale() const { return scale_; }
    const std::vector<RatingRecord>& records() const { return records_; }
    std::set<std::string> dimensions() const;
    std::set<std::string> raters(const std::string& dimension) const;
    /// item -> rater -> score for one dimension.
    std::map<std::string, std::map<std::string, double>> by_item(const std::string& dimension) const;

private:
    int scale_;
    std::vector<RatingRecord> records_;
    std::set<std::tuple<std::string, std::string, std::string>> keys_;
};

struct PairKappa {
    std::string rater_a, rater_b;
    std::size_t overlap = 0;
    KappaResult kappa;
};

struct PairwiseKappa {
    double aggregate = 0.0;
    std::vector<PairKappa> per_pair;

    nlohmann::json to_json() const;
};

/// Pairs with fewer than `min_overlap` shared items are skipped; throws
/// InputError when no pair qualifies. Non-integer scores are rejected.
PairwiseKappa pairwise_qwk_weighted(const RatingSet& ratings, const std::string& dimension,
                                    std::size_t min_overlap = 2);

/// Aggregates with overlap weights; exposed for callers with precomputed pairs.
double weighted_kappa_mean(const std::vector<PairKappa>& pairs);

struct Agreement {
    double mae = 0.0;
    double frac_within = 0.0;
    std::size_t n = 0;

    nlohmann::json to_json() const;
};

/// Judge vs unrounded expert mean per item. Items the judge did not score
/// are skipped; throws InputError when nothing overlaps.
Agreement judge_agreement(const std::map<std::string, double>& judge, const RatingSet& experts,
                          const std::string& dimension, double threshold = 0.5);

/// Each expert vs the mean of the other experts on the same item. Items with
/// a single expert are skipped; items with two use the single other rating.
Agreement leave_one_out_agreement(const RatingSet& experts, const std::string& dimension, double threshold = 0.5);

/// Half-up rounding to the nearest category, clamped to [1, scale].
int round_half_up(double x, int scale);

/// Judge vs consensus rounded half-up, as QWK.
KappaResult judge_consensus_qwk(const std::map<std::string, double>& judge, const RatingSet& experts,
                                const std::string& dimension);

/// Expert dimension -> judge criteria, combined by mean.
struct DimensionMapping {
    std::map<std::string, std::vector<std::string>> dimensions;

    /// JSON {"combiner": "mean", "dimensions": {expert_dim: [criterion, ...]}}.
    static DimensionMapping load(const std::filesystem::path& path);
    static DimensionMapping from_json(const nlohmann::json& j);

    /// item -> criterion -> score  =>  item -> score for `dimension`. Items
    /// missing any mapped criterion are dropped.
    std::map<std::string, double> combine(const std::map<std::string, std::map<std::string, double>>& judge,
                                          const std::string& dimension) const;
};

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
    double lo = 0.0, hi = 0.0;
};

/// Wilson score interval. Throws InputError for n == 0, successes > n, or a
/// confidence outside (0, 1).
Interval wilson_interval(std::size_t successes, std::size_t n, double confidence = 0.95);

struct TTest {
    double t = 0.0;
    double p_two_sided = 1.0;
    std::size_t df = 0;
    bool zero_differences = false;  // every difference 0: t=0, p=1
    bool zero_variance = false;     // constant non-zero difference: t=+-inf, p=0
};

/// Paired test over a[i] - b[i]. Throws InputError on length mismatch or n < 2.
TTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided tail probability of Student's t.
double student_t_two_sided(double t, double df);

/// "***", "**", "*" or "" for p below 0.001, 0.01, 0.05.
std::string significance_stars(double p);

/// system -> criterion -> query id -> score.
using JudgeScores = std::map<std::string, std::map<std::string, std::map<std::string, double>>>;

struct CriterionRow {
    std::string criterion;
    std::map<std::string, double> means;  // per system
    std::optional<std::string> best;      // lowest mean
    std::optional<std::string> runner_up;
    std::optional<TTest> test;            // best vs runner-up
    std::string stars;
};

struct JudgeTable {
    std::vector<std::string> systems;
    std::vector<CriterionRow> rows;
    std::size_t n_queries = 0;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Lower scores are better. Throws InputError when systems disagree on the
/// criteria or query ids they cover.
JudgeTable aggregate_judge_scores(const JudgeScores& scores);

/// JSONL {system, query_id, criterion, score}.
JudgeScores load_judge_scores(const std::filesystem::path& path);
JudgeScores load_judge_scores(std::istream& in, const std::string& source);

// ---------------------------------------------------------------------------
// Text tables

std::string format_confusion(const TriageConfusion& c, const TriageScores& s);
std::string format_retrieval(const std::map<std::string, RetrievalMetrics>& by_system);

}  // namespace mhrag::eval
