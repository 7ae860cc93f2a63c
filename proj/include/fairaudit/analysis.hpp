#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/domain.hpp"

namespace fairaudit::analysis {

/// Passing score set per stage. Defaults: {3,4,5} for S1/S2/S4, {4,5} for S3.
/// Sets must be upward-closed subsets of 1..5.
class ThresholdPolicy {
public:
    ThresholdPolicy();  // paper-anchored defaults

    static ThresholdPolicy with_passing(Stage stage, std::set<int> passing);

    const std::set<int>& passing(Stage stage) const;
    void set_passing(Stage stage, std::set<int> passing);  // validates upward closure

    /// Render like "S1=3-5 S2=3-5 S3=4-5 S4=3-5" for report headers.
    std::string describe() const;

    bool operator==(const ThresholdPolicy&) const = default;

private:
    std::map<Stage, std::set<int>> passing_;
};

/// 100 * |{score in passing(stage)}| / |evals|. Empty input is an error,
/// never a silent zero.
double stage_performance(const std::vector<RubricEvaluation>& evals, Stage stage,
                         MetricKind metric, const ThresholdPolicy& policy);

/// Aggregate run evaluations into per-(stage, factor, metric) percentages.
/// Cases resolve to (stage, factor) through `data`. Cells with no
/// evaluations are absent, not zero.
StageScorecard scorecard(const std::vector<RubricEvaluation>& evals,
                         const dataset::Dataset& data, const std::string& model,
                         const ThresholdPolicy& policy);

struct BoxStats {
    double median = 0;
    double q1 = 0;
    double q3 = 0;
    double iqr = 0;
    double whisker_low = 0;
    double whisker_high = 0;
    std::vector<double> outliers;

    bool operator==(const BoxStats&) const = default;
};

/// Five-number box summary. Quantiles interpolate order statistics linearly
/// (position p*(n-1), zero-indexed); whiskers reach the most extreme data
/// within 1.5*IQR of the quartiles; everything beyond is an outlier.
BoxStats box_stats(std::vector<double> values);

/// Mean human score per (case_id, metric). The same annotator submitting two
/// different scores for one item is a conflict error; identical duplicates
/// collapse.
std::map<std::pair<std::string, MetricKind>, double> aggregate_human(
    const std::vector<HumanAnnotation>& annotations);

// --- correlation statistics ------------------------------------------------

/// Pearson r: sample covariance over the product of sample standard
/// deviations. Inputs must be same-length (n >= 2) and non-constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Mean fractional ranks, ties averaged ("1224" style -> 1, 2.5, 2.5, 4).
std::vector<double> rank_average_ties(const std::vector<double>& values);

/// Spearman rho = pearson of the rank vectors.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Kendall tau-b (tie corrected), computed via sort + merge counting rather
/// than pairwise enumeration.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-weighted Cohen's kappa over the 5x5 category grid (scores 1..5).
double weighted_kappa(const std::vector<int>& a, const std::vector<int>& b);

struct CorrelationResult {
    MetricKind metric = MetricKind::ICS;
    double evaluator_temperature = 0.0;
    PromptMethod prompt_method = PromptMethod::ZeroShotExplainable;
    std::optional<double> r;
    std::optional<double> rho;
    std::optional<double> tau;
    std::optional<double> kappa;
    std::size_t n = 0;

    bool operator==(const CorrelationResult&) const = default;
};

/// One row per (metric, evaluator temperature, prompt method) group present
/// in the join of automated scores and human labels. Groups with n < 2 are
/// omitted; an empty join overall is a no-overlap error. For kappa the human
/// means are rounded half-up to categories 1..5; r/rho/tau use them unrounded.
std::vector<CorrelationResult> correlation_report(
    const std::vector<RubricEvaluation>& auto_evals,
    const std::map<std::pair<std::string, MetricKind>, double>& human_means);

}  // namespace fairaudit::analysis
