#include "fairaudit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairaudit/util.hpp"

namespace fairaudit::analysis {

// ---------------------------------------------------------------------------
// ThresholdPolicy
// ---------------------------------------------------------------------------

namespace {

void check_upward_closed(Stage stage, const std::set<int>& passing) {
    if (passing.empty()) {
        throw ValidationError("thresholds", "empty passing set for " + stage_label(stage));
    }
    for (int s : passing) {
        if (s < 1 || s > 5) {
            throw ValidationError("thresholds", "passing score " + std::to_string(s) +
                                                    " outside 1..5 for " + stage_label(stage));
        }
        if (s < 5 && passing.count(s + 1) == 0) {
            throw ValidationError("thresholds", "passing set for " + stage_label(stage) +
                                                    " is not upward closed");
        }
    }
}

}  // namespace

ThresholdPolicy::ThresholdPolicy() {
    passing_[Stage::DirectInquiry] = {3, 4, 5};
    passing_[Stage::StoryConsistency] = {3, 4, 5};
    passing_[Stage::ImplicitAssociation] = {4, 5};
    passing_[Stage::UnknownSituation] = {3, 4, 5};
}

ThresholdPolicy ThresholdPolicy::with_passing(Stage stage, std::set<int> passing) {
    ThresholdPolicy p;
    p.set_passing(stage, std::move(passing));
    return p;
}

const std::set<int>& ThresholdPolicy::passing(Stage stage) const {
    return passing_.at(stage);
}

void ThresholdPolicy::set_passing(Stage stage, std::set<int> passing) {
    check_upward_closed(stage, passing);
    passing_[stage] = std::move(passing);
}

std::string ThresholdPolicy::describe() const {
    std::string out;
    for (Stage s : kAllStages) {
        const auto& p = passing_.at(s);
        if (!out.empty()) out += ' ';
        out += stage_label(s) + "=" + std::to_string(*p.begin()) + "-" + std::to_string(*p.rbegin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Threshold aggregation
// ---------------------------------------------------------------------------

double stage_performance(const std::vector<RubricEvaluation>& evals, Stage stage,
                         MetricKind metric, const ThresholdPolicy& policy) {
    if (evals.empty()) {
        throw StatsError("stage_performance: no evaluations for " + stage_label(stage) + "/" +
                         metric_label(metric));
    }
    if (!metric_legal_for_stage(metric, stage)) {
        throw ValidationError("metric", "metric " + metric_label(metric) + " is not legal for " +
                                            stage_label(stage));
    }
    const auto& passing = policy.passing(stage);
    std::size_t pass = 0;
    for (const auto& e : evals) {
        if (e.metric != metric) {
            throw ValidationError("metric", "evaluation for case '" + e.case_id +
                                                "' carries metric " + metric_label(e.metric) +
                                                ", expected " + metric_label(metric));
        }
        if (passing.count(e.score) != 0) ++pass;
    }
    return 100.0 * static_cast<double>(pass) / static_cast<double>(evals.size());
}

StageScorecard scorecard(const std::vector<RubricEvaluation>& evals,
                         const dataset::Dataset& data, const std::string& model,
                         const ThresholdPolicy& policy) {
    // bucket scores by (stage, factor, metric); cases resolve through the dataset
    std::map<StageScorecard::CellKey, std::pair<std::size_t, std::size_t>> buckets;  // pass, total
    for (const auto& e : evals) {
        const TestCase* c = data.find(e.case_id);
        if (c == nullptr) {
            throw IntegrityError("scorecard: evaluation references unknown case '" + e.case_id +
                                 "'");
        }
        auto& [pass, total] = buckets[{c->stage, c->factor, e.metric}];
        ++total;
        if (policy.passing(c->stage).count(e.score) != 0) ++pass;
    }

    StageScorecard card;
    card.model = model;
    for (const auto& [key, counts] : buckets) {
        card.entries[key] =
            100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return card;
}

// ---------------------------------------------------------------------------
// Box statistics
// ---------------------------------------------------------------------------

namespace {

// linear interpolation of order statistics at position p*(n-1), zero-indexed
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw StatsError("box_stats: empty input");
    std::sort(values.begin(), values.end());

    BoxStats b;
    b.q1 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.50);
    b.q3 = quantile_sorted(values, 0.75);
    b.iqr = b.q3 - b.q1;

    const double lo_fence = b.q1 - 1.5 * b.iqr;
    const double hi_fence = b.q3 + 1.5 * b.iqr;

    b.whisker_low = values.back();
    b.whisker_high = values.front();
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            b.whisker_low = std::min(b.whisker_low, v);
            b.whisker_high = std::max(b.whisker_high, v);
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Human annotation aggregation
// ---------------------------------------------------------------------------

std::map<std::pair<std::string, MetricKind>, double> aggregate_human(
    const std::vector<HumanAnnotation>& annotations) {
    // detect conflicting duplicates before averaging
    std::map<std::tuple<std::string, MetricKind, std::string>, int> seen;
    std::map<std::pair<std::string, MetricKind>, std::pair<double, std::size_t>> sums;
    for (const auto& a : annotations) {
        a.validate();
        const auto key = std::make_tuple(a.case_id, a.metric, a.annotator_id);
        auto [it, inserted] = seen.emplace(key, a.score);
        if (!inserted) {
            if (it->second != a.score) {
                throw IntegrityError("annotations: annotator '" + a.annotator_id +
                                     "' submitted conflicting scores for case '" + a.case_id +
                                     "' metric " + metric_label(a.metric));
            }
            continue;  // identical duplicate collapses
        }
        auto& [sum, count] = sums[{a.case_id, a.metric}];
        sum += a.score;
        ++count;
    }

    std::map<std::pair<std::string, MetricKind>, double> means;
    for (const auto& [key, sc] : sums) {
        means[key] = sc.first / static_cast<double>(sc.second);
    }
    return means;
}

// ---------------------------------------------------------------------------
// Correlation statistics
// ---------------------------------------------------------------------------

namespace {

void check_lengths(const std::vector<double>& x, const std::vector<double>& y, const char* name) {
    if (x.size() != y.size()) {
        throw StatsError(std::string(name) + ": length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw StatsError(std::string(name) + ": need at least 2 samples, got " +
                         std::to_string(x.size()));
    }
}

bool is_constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// strict inversion count via merge sort; `a` is consumed as scratch
std::uint64_t count_inversions(std::vector<double>& a) {
    const std::size_t n = a.size();
    std::vector<double> buf(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (a[j] < a[i]) {
                    inversions += mid - i;  // a[i..mid) all exceed a[j]
                    buf[k++] = a[j++];
                } else {
                    buf[k++] = a[i++];
                }
            }
            while (i < mid) buf[k++] = a[i++];
            while (j < hi) buf[k++] = a[j++];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                      buf.begin() + static_cast<std::ptrdiff_t>(hi),
                      a.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::uint64_t pairs = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= v.size(); ++i) {
        if (i < v.size() && v[i] == v[i - 1]) {
            ++run;
        } else {
            pairs += static_cast<std::uint64_t>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    check_lengths(x, y, "pearson");
    if (is_constant(x) || is_constant(y)) {
        throw StatsError("pearson: constant input has no defined correlation");
    }
    const auto n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double cov = 0, var_x = 0, var_y = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    return cov / std::sqrt(var_x * var_y);
}

std::vector<double> rank_average_ties(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    check_lengths(x, y, "spearman");
    if (is_constant(x) || is_constant(y)) {
        throw StatsError("spearman: constant input has no defined correlation");
    }
    return pearson(rank_average_ties(x), rank_average_ties(y));
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    check_lengths(x, y, "kendall_tau");
    const std::size_t n = x.size();

    // Knight's algorithm: sort by (x, y), then discordant pairs are exactly
    // the strict inversions of the y sequence.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::uint64_t joint_ties = 0;  // pairs tied in both x and y
    {
        std::size_t run = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            if (i < n && x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]]) {
                ++run;
            } else {
                joint_ties += static_cast<std::uint64_t>(run) * (run - 1) / 2;
                run = 1;
            }
        }
    }

    std::vector<double> y_sorted_by_x(n);
    for (std::size_t i = 0; i < n; ++i) y_sorted_by_x[i] = y[order[i]];
    const std::uint64_t discordant = count_inversions(y_sorted_by_x);

    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t ties_x = tie_pair_count(x);
    const std::uint64_t ties_y = tie_pair_count(y);
    const std::uint64_t concordant = total - ties_x - ties_y + joint_ties - discordant;

    const double denom = std::sqrt(static_cast<double>(total - ties_x)) *
                         std::sqrt(static_cast<double>(total - ties_y));
    if (denom == 0.0) {
        throw StatsError("kendall_tau: constant input has no defined correlation");
    }
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) / denom;
}

double weighted_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw StatsError("weighted_kappa: length mismatch");
    if (a.size() < 2) throw StatsError("weighted_kappa: need at least 2 samples");
    constexpr int k = 5;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 1 || a[i] > k || b[i] < 1 || b[i] > k) {
            throw StatsError("weighted_kappa: categories must lie in 1..5");
        }
    }

    double observed[k][k] = {};
    double row[k] = {}, col[k] = {};
    const auto n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        observed[a[i] - 1][b[i] - 1] += 1.0;
        row[a[i] - 1] += 1.0;
        col[b[i] - 1] += 1.0;
    }

    // linear agreement weights: w_ij = 1 - |i-j| / (k-1)
    double po = 0, pe = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double w = 1.0 - std::abs(i - j) / static_cast<double>(k - 1);
            po += w * observed[i][j] / n;
            pe += w * (row[i] / n) * (col[j] / n);
        }
    }
    if (pe == 1.0) {
        throw StatsError("weighted_kappa: degenerate marginals (chance agreement is 1)");
    }
    return (po - pe) / (1.0 - pe);
}

// ---------------------------------------------------------------------------
// Correlation report
// ---------------------------------------------------------------------------

std::vector<CorrelationResult> correlation_report(
    const std::vector<RubricEvaluation>& auto_evals,
    const std::map<std::pair<std::string, MetricKind>, double>& human_means) {
    struct GroupKey {
        MetricKind metric;
        double temperature;
        PromptMethod method;
        bool operator<(const GroupKey& o) const {
            return std::tie(metric, temperature, method) <
                   std::tie(o.metric, o.temperature, o.method);
        }
    };
    struct GroupData {
        std::vector<double> auto_scores;
        std::vector<double> human_scores;
    };

    std::map<GroupKey, GroupData> groups;
    std::size_t joined = 0;
    for (const auto& e : auto_evals) {
        const auto it = human_means.find({e.case_id, e.metric});
        if (it == human_means.end()) continue;
        ++joined;
        auto& g = groups[{e.metric, e.evaluator_temperature, e.prompt_method}];
        g.auto_scores.push_back(static_cast<double>(e.score));
        g.human_scores.push_back(it->second);
    }
    if (joined == 0) {
        throw StatsError(
            "correlation_report: automated scores and human labels share no (case, metric) items");
    }

    std::vector<CorrelationResult> results;
    for (const auto& [key, g] : groups) {
        if (g.auto_scores.size() < 2) continue;  // rendered as absent
        CorrelationResult row;
        row.metric = key.metric;
        row.evaluator_temperature = key.temperature;
        row.prompt_method = key.method;
        row.n = g.auto_scores.size();

        try {
            row.r = pearson(g.auto_scores, g.human_scores);
        } catch (const StatsError&) {
        }
        try {
            row.rho = spearman(g.auto_scores, g.human_scores);
        } catch (const StatsError&) {
        }
        try {
            row.tau = kendall_tau(g.auto_scores, g.human_scores);
        } catch (const StatsError&) {
        }
        try {
            // kappa needs categories: round human means half-up into 1..5
            std::vector<int> auto_cat, human_cat;
            auto_cat.reserve(g.auto_scores.size());
            human_cat.reserve(g.human_scores.size());
            for (double v : g.auto_scores) auto_cat.push_back(static_cast<int>(v));
            for (double v : g.human_scores) {
                const int c = std::clamp(static_cast<int>(std::floor(v + 0.5)), 1, 5);
                human_cat.push_back(c);
            }
            row.kappa = weighted_kappa(auto_cat, human_cat);
        } catch (const StatsError&) {
        }
        results.push_back(std::move(row));
    }
    return results;
}

}  // namespace fairaudit::analysis
