#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fairaudit/analysis.hpp"
#include "oracles.hpp"

using namespace fairaudit;
using namespace fairaudit::analysis;

namespace {

std::vector<RubricEvaluation> evals_from_scores(const std::vector<int>& scores,
                                                MetricKind metric) {
    std::vector<RubricEvaluation> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        RubricEvaluation e;
        e.case_id = "case-" + std::to_string(i);
        e.metric = metric;
        e.score = scores[i];
        e.evaluator_model = "judge";
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<double> random_tied_vector(std::mt19937& rng, std::size_t n, int lo = 1, int hi = 5) {
    std::uniform_int_distribution<int> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

}  // namespace

TEST_CASE("threshold policy defaults and validation") {
    ThresholdPolicy policy;
    CHECK(policy.passing(Stage::DirectInquiry) == std::set<int>{3, 4, 5});
    CHECK(policy.passing(Stage::StoryConsistency) == std::set<int>{3, 4, 5});
    CHECK(policy.passing(Stage::ImplicitAssociation) == std::set<int>{4, 5});
    CHECK(policy.passing(Stage::UnknownSituation) == std::set<int>{3, 4, 5});
    CHECK(policy.describe() == "S1=3-5 S2=3-5 S3=4-5 S4=3-5");

    CHECK_THROWS_AS(ThresholdPolicy::with_passing(Stage::DirectInquiry, {3, 5}), ValidationError);
    CHECK_THROWS_AS(ThresholdPolicy::with_passing(Stage::DirectInquiry, {}), ValidationError);
    CHECK_THROWS_AS(ThresholdPolicy::with_passing(Stage::DirectInquiry, {0, 1, 2, 3, 4, 5}),
                    ValidationError);
    CHECK_NOTHROW(ThresholdPolicy::with_passing(Stage::StoryConsistency, {2, 3, 4, 5}));
}

TEST_CASE("stage_performance threshold arithmetic") {
    ThresholdPolicy policy;
    const std::vector<int> scores{5, 4, 3, 2, 1};
    CHECK(stage_performance(evals_from_scores(scores, MetricKind::ICS), Stage::DirectInquiry,
                            MetricKind::ICS, policy) == 60.0);
    CHECK(stage_performance(evals_from_scores(scores, MetricKind::SBAS),
                            Stage::ImplicitAssociation, MetricKind::SBAS, policy) == 40.0);
    CHECK(stage_performance(evals_from_scores(scores, MetricKind::ICS), Stage::UnknownSituation,
                            MetricKind::ICS, policy) == 60.0);
    CHECK(stage_performance(evals_from_scores({5, 5, 5}, MetricKind::ICS), Stage::DirectInquiry,
                            MetricKind::ICS, policy) == 100.0);

    CHECK_THROWS_AS(stage_performance({}, Stage::DirectInquiry, MetricKind::ICS, policy),
                    StatsError);
    // SBAS cannot attach to an S1 population
    CHECK_THROWS_AS(stage_performance(evals_from_scores(scores, MetricKind::SBAS),
                                      Stage::DirectInquiry, MetricKind::SBAS, policy),
                    ValidationError);
}

TEST_CASE("stage_performance is monotone in any single score") {
    std::mt19937 rng(417);
    ThresholdPolicy policy;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> score_dist(1, 5);
        std::uniform_int_distribution<std::size_t> len_dist(1, 20);
        std::vector<int> scores(len_dist(rng));
        for (auto& s : scores) s = score_dist(rng);

        const double base = stage_performance(evals_from_scores(scores, MetricKind::ICS),
                                              Stage::DirectInquiry, MetricKind::ICS, policy);
        std::uniform_int_distribution<std::size_t> idx_dist(0, scores.size() - 1);
        const std::size_t i = idx_dist(rng);
        if (scores[i] < 5) {
            ++scores[i];
            const double bumped = stage_performance(evals_from_scores(scores, MetricKind::ICS),
                                                    Stage::DirectInquiry, MetricKind::ICS, policy);
            CHECK(bumped >= base);
        }
    }
}

TEST_CASE("scorecard reproduces a hand-computed 2x6 cell table") {
    // gender: S1 [5,4,3,2,1], S2 TCS [5,5,1] PCS [3,2,2] ETCS [4,4,4],
    //         S3 [5,4,3,2,1], S4 [1,1,3]
    // subject: S1 [2,2], S2 TCS [3] PCS [5] ETCS [1], S3 [4,4], S4 [5]
    dataset::Dataset data;
    auto add_case = [&](const std::string& id, Stage stage, const std::string& factor,
                        const std::string& scenario) {
        CasePayload payload;
        if (stage == Stage::StoryConsistency) {
            payload = StoryPair{"a", "b", "note", "exp"};
        } else if (stage == Stage::ImplicitAssociation) {
            payload = QuestionPair{"qa", "qb", "exp"};
        } else {
            payload = SingleQuestion{"q", "exp"};
        }
        data.cases.push_back(TestCase::make(id, stage, factor, scenario, payload));
    };

    std::vector<RubricEvaluation> evals;
    auto add_scores = [&](const std::string& prefix, Stage stage, const std::string& factor,
                          const std::string& scenario, MetricKind metric,
                          const std::vector<int>& scores) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const std::string id = prefix + "-" + metric_label(metric) + "-" + std::to_string(i);
            if (data.find(id) == nullptr) add_case(id, stage, factor, scenario);
            RubricEvaluation e;
            e.case_id = id;
            e.metric = metric;
            e.score = scores[i];
            e.evaluator_model = "judge";
            evals.push_back(std::move(e));
        }
    };

    add_scores("g-s1", Stage::DirectInquiry, "gender", "classroom-management", MetricKind::ICS,
               {5, 4, 3, 2, 1});
    add_scores("g-s2", Stage::StoryConsistency, "gender", "classroom-management", MetricKind::TCS,
               {5, 5, 1});
    add_scores("g-s2p", Stage::StoryConsistency, "gender", "classroom-management", MetricKind::PCS,
               {3, 2, 2});
    add_scores("g-s2e", Stage::StoryConsistency, "gender", "classroom-management",
               MetricKind::ETCS, {4, 4, 4});
    add_scores("g-s3", Stage::ImplicitAssociation, "gender", "classroom-management",
               MetricKind::SBAS, {5, 4, 3, 2, 1});
    add_scores("g-s4", Stage::UnknownSituation, "gender", "classroom-management", MetricKind::ICS,
               {1, 1, 3});
    add_scores("s-s1", Stage::DirectInquiry, "subject", "classroom-assessment", MetricKind::ICS,
               {2, 2});
    add_scores("s-s2", Stage::StoryConsistency, "subject", "instructional-activity-design",
               MetricKind::TCS, {3});
    add_scores("s-s2p", Stage::StoryConsistency, "subject", "instructional-activity-design",
               MetricKind::PCS, {5});
    add_scores("s-s2e", Stage::StoryConsistency, "subject", "instructional-activity-design",
               MetricKind::ETCS, {1});
    add_scores("s-s3", Stage::ImplicitAssociation, "subject", "self-study-guide", MetricKind::SBAS,
               {4, 4});
    add_scores("s-s4", Stage::UnknownSituation, "subject", "personalized-course-tutoring",
               MetricKind::ICS, {5});

    const auto card = scorecard(evals, data, "model-x", ThresholdPolicy());
    REQUIRE(card.entries.size() == 12);
    using K = StageScorecard::CellKey;
    CHECK(card.entries.at(K{Stage::DirectInquiry, "gender", MetricKind::ICS}) == 60.0);
    CHECK(card.entries.at(K{Stage::StoryConsistency, "gender", MetricKind::TCS}) ==
          doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(card.entries.at(K{Stage::StoryConsistency, "gender", MetricKind::PCS}) ==
          doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(card.entries.at(K{Stage::StoryConsistency, "gender", MetricKind::ETCS}) == 100.0);
    CHECK(card.entries.at(K{Stage::ImplicitAssociation, "gender", MetricKind::SBAS}) == 40.0);
    CHECK(card.entries.at(K{Stage::UnknownSituation, "gender", MetricKind::ICS}) ==
          doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(card.entries.at(K{Stage::DirectInquiry, "subject", MetricKind::ICS}) == 0.0);
    CHECK(card.entries.at(K{Stage::StoryConsistency, "subject", MetricKind::TCS}) == 100.0);
    CHECK(card.entries.at(K{Stage::StoryConsistency, "subject", MetricKind::PCS}) == 100.0);
    CHECK(card.entries.at(K{Stage::StoryConsistency, "subject", MetricKind::ETCS}) == 0.0);
    CHECK(card.entries.at(K{Stage::ImplicitAssociation, "subject", MetricKind::SBAS}) == 100.0);
    CHECK(card.entries.at(K{Stage::UnknownSituation, "subject", MetricKind::ICS}) == 100.0);

    SUBCASE("permutation invariance") {
        auto shuffled = evals;
        std::mt19937 rng(7);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(scorecard(shuffled, data, "model-x", ThresholdPolicy()) == card);
    }

    SUBCASE("absence propagation: only populated cells appear") {
        std::vector<RubricEvaluation> s1_only(evals.begin(), evals.begin() + 5);
        const auto partial = scorecard(s1_only, data, "model-x", ThresholdPolicy());
        CHECK(partial.entries.size() == 1);
        CHECK(partial.entries.count(K{Stage::DirectInquiry, "gender", MetricKind::ICS}) == 1);
    }
}

TEST_CASE("box_stats fixtures") {
    SUBCASE("evenly spaced") {
        const auto b = box_stats({1, 2, 3, 4, 5});
        CHECK(b.median == 3.0);
        CHECK(b.q1 == 2.0);
        CHECK(b.q3 == 4.0);
        CHECK(b.iqr == 2.0);
        CHECK(b.outliers.empty());
        CHECK(b.whisker_low == 1.0);
        CHECK(b.whisker_high == 5.0);
    }
    SUBCASE("low outlier") {
        const auto b = box_stats({1, 10, 11, 12, 13});
        CHECK(b.q1 == 10.0);
        CHECK(b.median == 11.0);
        CHECK(b.q3 == 12.0);
        CHECK(b.iqr == 2.0);
        REQUIRE(b.outliers.size() == 1);
        CHECK(b.outliers[0] == 1.0);
        CHECK(b.whisker_low == 10.0);
        CHECK(b.whisker_high == 13.0);
    }
    SUBCASE("singleton") {
        const auto b = box_stats({7});
        CHECK(b.median == 7.0);
        CHECK(b.q1 == 7.0);
        CHECK(b.q3 == 7.0);
        CHECK(b.iqr == 0.0);
        CHECK(b.outliers.empty());
    }
    SUBCASE("empty input") { CHECK_THROWS_AS(box_stats({}), StatsError); }
}

TEST_CASE("box_stats invariants on randomized inputs") {
    std::mt19937 rng(90210);
    std::uniform_real_distribution<double> val(-50.0, 150.0);
    std::uniform_int_distribution<std::size_t> len(1, 120);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> values(len(rng));
        for (auto& v : values) v = trial % 3 == 0 ? std::round(val(rng)) : val(rng);

        const auto b = box_stats(values);
        const double lo = *std::min_element(values.begin(), values.end());
        const double hi = *std::max_element(values.begin(), values.end());
        CHECK(b.q1 <= b.median);
        CHECK(b.median <= b.q3);
        CHECK(b.iqr == b.q3 - b.q1);
        CHECK(b.whisker_low >= lo);
        CHECK(b.whisker_high <= hi);
        const double lo_fence = b.q1 - 1.5 * b.iqr;
        const double hi_fence = b.q3 + 1.5 * b.iqr;
        for (double o : b.outliers) CHECK((o < lo_fence || o > hi_fence));
        CHECK(b.whisker_low >= lo_fence);
        CHECK(b.whisker_high <= hi_fence);
    }
}

TEST_CASE("aggregate_human") {
    auto annot = [](const std::string& cid, MetricKind m, const std::string& who, int score) {
        return HumanAnnotation{cid, m, who, score};
    };

    SUBCASE("mean of three annotators") {
        const auto means = aggregate_human({annot("c1", MetricKind::ICS, "a1", 3),
                                            annot("c1", MetricKind::ICS, "a2", 4),
                                            annot("c1", MetricKind::ICS, "a3", 5)});
        CHECK(means.at({"c1", MetricKind::ICS}) == 4.0);
    }
    SUBCASE("single annotator identity") {
        const auto means = aggregate_human({annot("c1", MetricKind::TCS, "a1", 4)});
        CHECK(means.at({"c1", MetricKind::TCS}) == 4.0);
    }
    SUBCASE("unrounded mean") {
        const auto means = aggregate_human({annot("c1", MetricKind::ICS, "a1", 3),
                                            annot("c1", MetricKind::ICS, "a2", 4)});
        CHECK(means.at({"c1", MetricKind::ICS}) == 3.5);
    }
    SUBCASE("conflicting duplicate is an error") {
        CHECK_THROWS_AS(aggregate_human({annot("c1", MetricKind::ICS, "a1", 3),
                                         annot("c1", MetricKind::ICS, "a1", 5)}),
                        IntegrityError);
    }
    SUBCASE("identical duplicate collapses") {
        const auto means = aggregate_human({annot("c1", MetricKind::ICS, "a1", 3),
                                            annot("c1", MetricKind::ICS, "a1", 3),
                                            annot("c1", MetricKind::ICS, "a2", 5)});
        CHECK(means.at({"c1", MetricKind::ICS}) == 4.0);
    }
}

TEST_CASE("correlation basics") {
    const std::vector<double> inc{1, 2, 3, 4, 5};
    const std::vector<double> dec{9, 7, 5, 3, 1};
    const std::vector<double> curved{1, 4, 9, 16, 25};

    CHECK(pearson(inc, inc) == doctest::Approx(1.0));
    CHECK(spearman(inc, inc) == doctest::Approx(1.0));
    CHECK(kendall_tau(inc, inc) == doctest::Approx(1.0));

    // strictly decreasing: rank coefficients hit -1 regardless of linearity
    CHECK(spearman(curved, dec) == doctest::Approx(-1.0));
    CHECK(kendall_tau(curved, dec) == doctest::Approx(-1.0));

    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), StatsError);
    CHECK_THROWS_AS(pearson({1}, {1}), StatsError);
    CHECK_THROWS_AS(pearson({2, 2, 2}, {1, 2, 3}), StatsError);
    CHECK_THROWS_AS(spearman({2, 2, 2}, {1, 2, 3}), StatsError);
    CHECK_THROWS_AS(kendall_tau({2, 2, 2}, {1, 2, 3}), StatsError);
}

TEST_CASE("rank_average_ties handles ties with mean fractional ranks") {
    CHECK(rank_average_ties({10, 20, 20, 40}) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    CHECK(rank_average_ties({5, 5, 5}) == std::vector<double>{2.0, 2.0, 2.0});
    CHECK(rank_average_ties({3, 1, 2}) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("correlation statistics match brute-force oracles on tied data") {
    std::mt19937 rng(20260810);
    int spearman_defined = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = 50;
        // small integer range forces heavy ties; occasionally continuous
        auto x = trial % 4 == 3 ? random_tied_vector(rng, n, 1, 100)
                                : random_tied_vector(rng, n, 1, 5);
        auto y = trial % 4 == 3 ? random_tied_vector(rng, n, 1, 100)
                                : random_tied_vector(rng, n, 1, 5);

        const double r = pearson(x, y);
        const double rho = spearman(x, y);
        const double tau = kendall_tau(x, y);

        CHECK(std::abs(r - oracles::pearson_direct(x, y)) < 1e-12);
        CHECK(std::abs(rho - oracles::spearman_oracle(x, y)) < 1e-12);
        CHECK(std::abs(tau - oracles::kendall_bruteforce(x, y)) < 1e-12);

        // exact identity, not an approximation
        CHECK(rho == pearson(rank_average_ties(x), rank_average_ties(y)));
        ++spearman_defined;

        CHECK(std::abs(r) <= 1.0 + 1e-12);
        CHECK(std::abs(rho) <= 1.0 + 1e-12);
        CHECK(std::abs(tau) <= 1.0 + 1e-12);

        // symmetry
        CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-14));
        CHECK(spearman(y, x) == doctest::Approx(rho).epsilon(1e-14));
        CHECK(kendall_tau(y, x) == doctest::Approx(tau).epsilon(1e-14));
    }
    CHECK(spearman_defined == 120);
}

TEST_CASE("weighted kappa") {
    SUBCASE("hand-computed fixture") {
        // po_w = 4.5/5, pe_w = 3.3/5 -> kappa = 0.24/0.34 = 12/17
        const double k = weighted_kappa({1, 2, 3, 4, 5}, {2, 2, 3, 4, 4});
        CHECK(k == doctest::Approx(12.0 / 17.0).epsilon(1e-12));
    }
    SUBCASE("perfect agreement") {
        CHECK(weighted_kappa({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}) == doctest::Approx(1.0));
    }
    SUBCASE("matches disagreement-weight oracle on random categorical data") {
        std::mt19937 rng(5150);
        std::uniform_int_distribution<int> cat(1, 5);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<int> a(40), b(40);
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = cat(rng);
                b[i] = cat(rng);
            }
            double expected;
            try {
                expected = oracles::kappa_oracle(a, b);
            } catch (const std::exception&) {
                continue;
            }
            CHECK(std::abs(weighted_kappa(a, b) - expected) < 1e-12);
            CHECK(std::abs(weighted_kappa(a, b)) <= 1.0 + 1e-12);
        }
    }
    SUBCASE("error paths") {
        CHECK_THROWS_AS(weighted_kappa({1, 2}, {1}), StatsError);
        CHECK_THROWS_AS(weighted_kappa({1}, {1}), StatsError);
        CHECK_THROWS_AS(weighted_kappa({0, 2}, {1, 2}), StatsError);
        CHECK_THROWS_AS(weighted_kappa({1, 6}, {1, 2}), StatsError);
        // both raters constant and equal: chance agreement is already 1
        CHECK_THROWS_AS(weighted_kappa({3, 3, 3}, {3, 3, 3}), StatsError);
    }
}

TEST_CASE("correlation_report") {
    auto eval = [](const std::string& cid, MetricKind m, int score, double temp,
                   PromptMethod method) {
        RubricEvaluation e;
        e.case_id = cid;
        e.metric = m;
        e.score = score;
        e.evaluator_model = "judge";
        e.prompt_method = method;
        e.evaluator_temperature = temp;
        return e;
    };

    SUBCASE("perfect agreement pins r and rho at 1") {
        std::vector<RubricEvaluation> autos;
        std::map<std::pair<std::string, MetricKind>, double> humans;
        for (int i = 0; i < 6; ++i) {
            const std::string cid = "c" + std::to_string(i);
            const int score = i % 5 + 1;
            autos.push_back(eval(cid, MetricKind::ICS, score, 0.1,
                                 PromptMethod::ZeroShotExplainable));
            humans[{cid, MetricKind::ICS}] = score;
        }
        const auto rows = correlation_report(autos, humans);
        REQUIRE(rows.size() == 1);
        CHECK(*rows[0].r == doctest::Approx(1.0));
        CHECK(*rows[0].rho == doctest::Approx(1.0));
        CHECK(*rows[0].tau == doctest::Approx(1.0));
        CHECK(rows[0].n == 6);
    }

    SUBCASE("two temperatures x two methods for ICS give exactly 4 rows") {
        std::vector<RubricEvaluation> autos;
        std::map<std::pair<std::string, MetricKind>, double> humans;
        for (double temp : {0.1, 0.5}) {
            for (PromptMethod method :
                 {PromptMethod::ZeroShotExplainable, PromptMethod::ZeroShotExplainableCoT}) {
                for (int i = 0; i < 4; ++i) {
                    const std::string cid = "c" + std::to_string(i);
                    autos.push_back(eval(cid, MetricKind::ICS, i % 5 + 1, temp, method));
                    humans[{cid, MetricKind::ICS}] = (i % 5) + 1.0;
                }
            }
        }
        CHECK(correlation_report(autos, humans).size() == 4);
    }

    SUBCASE("disjoint ids raise a no-overlap error") {
        std::vector<RubricEvaluation> autos{
            eval("c1", MetricKind::ICS, 3, 0.1, PromptMethod::ZeroShotExplainable)};
        std::map<std::pair<std::string, MetricKind>, double> humans{
            {{"other", MetricKind::ICS}, 3.0}};
        CHECK_THROWS_AS(correlation_report(autos, humans), StatsError);
    }

    SUBCASE("groups with n < 2 are omitted") {
        std::vector<RubricEvaluation> autos{
            eval("c1", MetricKind::ICS, 3, 0.1, PromptMethod::ZeroShotExplainable),
            eval("c1", MetricKind::TCS, 4, 0.1, PromptMethod::ZeroShotExplainable),
            eval("c2", MetricKind::TCS, 2, 0.1, PromptMethod::ZeroShotExplainable)};
        std::map<std::pair<std::string, MetricKind>, double> humans{
            {{"c1", MetricKind::ICS}, 3.0},
            {{"c1", MetricKind::TCS}, 4.0},
            {{"c2", MetricKind::TCS}, 2.0}};
        const auto rows = correlation_report(autos, humans);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].metric == MetricKind::TCS);
    }

    SUBCASE("kappa rounds human means half-up to categories") {
        std::vector<RubricEvaluation> autos{
            eval("c1", MetricKind::ICS, 4, 0.0, PromptMethod::ZeroShotExplainable),
            eval("c2", MetricKind::ICS, 2, 0.0, PromptMethod::ZeroShotExplainable),
            eval("c3", MetricKind::ICS, 5, 0.0, PromptMethod::ZeroShotExplainable)};
        // means 3.5 -> 4, 1.5 -> 2, 5.0 -> 5: kappa sees exact agreement
        std::map<std::pair<std::string, MetricKind>, double> humans{
            {{"c1", MetricKind::ICS}, 3.5},
            {{"c2", MetricKind::ICS}, 1.5},
            {{"c3", MetricKind::ICS}, 5.0}};
        const auto rows = correlation_report(autos, humans);
        REQUIRE(rows.size() == 1);
        REQUIRE(rows[0].kappa.has_value());
        CHECK(*rows[0].kappa == doctest::Approx(1.0));
    }
}
