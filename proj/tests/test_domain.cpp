#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "fairaudit/domain.hpp"
#include "fairaudit/util.hpp"

using namespace fairaudit;
using nlohmann::json;

TEST_CASE("stage labels") {
    CHECK(stage_label(Stage::DirectInquiry) == "S1");
    CHECK(stage_label(Stage::StoryConsistency) == "S2");
    CHECK(stage_label(Stage::ImplicitAssociation) == "S3");
    CHECK(stage_label(Stage::UnknownSituation) == "S4");
    for (Stage s : kAllStages) CHECK(parse_stage(stage_label(s)) == s);
    CHECK_THROWS_AS(parse_stage("S5"), ValidationError);
    CHECK_THROWS_AS(parse_stage("s1"), ValidationError);
}

TEST_CASE("stage->metric mapping is fixed and exclusive") {
    CHECK(metrics_for_stage(Stage::DirectInquiry) == std::vector<MetricKind>{MetricKind::ICS});
    CHECK(metrics_for_stage(Stage::StoryConsistency) ==
          std::vector<MetricKind>{MetricKind::TCS, MetricKind::PCS, MetricKind::ETCS});
    CHECK(metrics_for_stage(Stage::ImplicitAssociation) ==
          std::vector<MetricKind>{MetricKind::SBAS});
    CHECK(metrics_for_stage(Stage::UnknownSituation) == std::vector<MetricKind>{MetricKind::ICS});

    CHECK(metric_legal_for_stage(MetricKind::ICS, Stage::DirectInquiry));
    CHECK(metric_legal_for_stage(MetricKind::ICS, Stage::UnknownSituation));
    CHECK_FALSE(metric_legal_for_stage(MetricKind::SBAS, Stage::DirectInquiry));
    CHECK_FALSE(metric_legal_for_stage(MetricKind::ICS, Stage::StoryConsistency));

    // every metric belongs to at least one stage, and the mapping is stable
    for (MetricKind m : kAllMetrics) {
        int stages_claiming = 0;
        for (Stage s : kAllStages) {
            if (metric_legal_for_stage(m, s)) ++stages_claiming;
        }
        CHECK(stages_claiming >= 1);
    }
}

TEST_CASE("slugify") {
    CHECK(util::slugify("Gender") == "gender");
    CHECK(util::slugify("Class/Team Activity Planning") == "class-team-activity-planning");
    CHECK(util::slugify("Educational Analysis - Precise Teaching Resource Matching") ==
          "educational-analysis-precise-teaching-resource-matching");
    CHECK(util::slugify("At-risk Student Prediction") == "at-risk-student-prediction");
    CHECK(util::slugify("  padded  ") == "padded");
}

TEST_CASE("bundled registry") {
    const Registry& reg = bundled_registry();
    CHECK(reg.factors().size() == 9);
    CHECK(reg.scenarios().size() == 26);

    // every scenario id is the slug of its display name
    std::set<std::string> names;
    for (const auto& s : reg.scenarios()) {
        CHECK(s.id == util::slugify(s.name));
        CHECK(!s.applicable_factors.empty());
        CHECK(names.insert(s.name).second);
        for (const auto& fid : s.applicable_factors) CHECK(reg.has_factor(fid));
    }
    CHECK(names.size() == 26);

    const SensitiveFactor* gender = reg.factor("gender");
    REQUIRE(gender != nullptr);
    CHECK(gender->name == "Gender");
    CHECK(reg.is_applicable("gender", "classroom-management"));
    CHECK(reg.scenario("classroom-management")->name == "Classroom Management");

    CHECK(reg.is_applicable("learning-style", "heuristic-teaching"));
    CHECK_FALSE(reg.is_applicable("gender", "heuristic-teaching"));
    CHECK(reg.factor_by_name("Race or Cultural Background") != nullptr);

    // registry_load() with no path returns the bundled data
    CHECK(registry_load() == reg);
}

TEST_CASE("registry integrity errors name the offending row") {
    SUBCASE("duplicate factor id") {
        const std::string content =
            R"({"type":"factor","id":"gender","name":"Gender","description":"d"})"
            "\n"
            R"({"type":"factor","id":"gender","name":"Gender2","description":"d"})";
        CHECK_THROWS_WITH_AS(parse_registry(content),
                             doctest::Contains("duplicate factor id 'gender'"), IntegrityError);
    }
    SUBCASE("dangling factor reference") {
        const std::string content =
            R"({"type":"factor","id":"gender","name":"Gender","description":"d"})"
            "\n"
            R"({"type":"scenario","id":"s1","name":"S","factors":["missing"]})";
        CHECK_THROWS_WITH_AS(parse_registry(content), doctest::Contains("unknown factor"),
                             IntegrityError);
    }
    SUBCASE("scenario without factors") {
        const std::string content = R"({"type":"scenario","id":"s1","name":"S","factors":[]})";
        CHECK_THROWS_AS(parse_registry(content), IntegrityError);
    }
    SUBCASE("unknown record type") {
        CHECK_THROWS_AS(parse_registry(R"({"type":"banana"})"), IntegrityError);
    }
    SUBCASE("malformed line carries its number") {
        const std::string content =
            R"({"type":"factor","id":"gender","name":"Gender","description":"d"})"
            "\nnot json";
        CHECK_THROWS_WITH_AS(parse_registry(content), doctest::Contains("line 2"), IntegrityError);
    }
}

TEST_CASE("test case stage/payload pairing is total and exclusive") {
    const SingleQuestion sq{"q", "e"};
    const StoryPair sp{"a", "b", "note", "e"};
    const QuestionPair qp{"qa", "qb", "e"};

    CHECK_NOTHROW(TestCase::make("c1", Stage::DirectInquiry, "gender", "classroom-management", sq));
    CHECK_NOTHROW(TestCase::make("c2", Stage::UnknownSituation, "gender", "classroom-management", sq));
    CHECK_NOTHROW(TestCase::make("c3", Stage::StoryConsistency, "gender", "classroom-management", sp));
    CHECK_NOTHROW(
        TestCase::make("c4", Stage::ImplicitAssociation, "gender", "classroom-management", qp));

    CHECK_THROWS_AS(TestCase::make("x", Stage::StoryConsistency, "gender", "cm", sq),
                    ValidationError);
    CHECK_THROWS_AS(TestCase::make("x", Stage::ImplicitAssociation, "gender", "cm", sq),
                    ValidationError);
    CHECK_THROWS_AS(TestCase::make("x", Stage::DirectInquiry, "gender", "cm", sp), ValidationError);
    CHECK_THROWS_AS(TestCase::make("x", Stage::UnknownSituation, "gender", "cm", qp),
                    ValidationError);

    CHECK_THROWS_AS(TestCase::make("x", Stage::DirectInquiry, "gender", "cm",
                                   SingleQuestion{"", "e"}),
                    ValidationError);
    CHECK_THROWS_AS(TestCase::make("x", Stage::StoryConsistency, "gender", "cm",
                                   StoryPair{"a", "", "note", "e"}),
                    ValidationError);
    CHECK_THROWS_AS(TestCase::make("", Stage::DirectInquiry, "gender", "cm", sq), ValidationError);
}

TEST_CASE("transcript arity follows the stage protocol") {
    Transcript t;
    t.case_id = "c1";
    t.responses = {"one"};
    CHECK_NOTHROW(t.validate_against(Stage::DirectInquiry));
    CHECK_NOTHROW(t.validate_against(Stage::UnknownSituation));
    CHECK_THROWS_AS(t.validate_against(Stage::StoryConsistency), ValidationError);
    CHECK_THROWS_AS(t.validate_against(Stage::ImplicitAssociation), ValidationError);

    t.responses = {"a", "b"};
    CHECK_NOTHROW(t.validate_against(Stage::StoryConsistency));
    CHECK_THROWS_AS(t.validate_against(Stage::DirectInquiry), ValidationError);
}

TEST_CASE("score and annotation validation") {
    RubricEvaluation e;
    e.case_id = "c";
    e.metric = MetricKind::ICS;
    e.evaluator_model = "judge";
    for (int s : {1, 2, 3, 4, 5}) {
        e.score = s;
        CHECK_NOTHROW(e.validate());
    }
    e.score = 0;
    CHECK_THROWS_AS(e.validate(), ValidationError);
    e.score = 6;
    CHECK_THROWS_AS(e.validate(), ValidationError);

    HumanAnnotation a{"c", MetricKind::ICS, "a1", 3};
    CHECK_NOTHROW(a.validate());
    a.score = 9;
    CHECK_THROWS_AS(a.validate(), ValidationError);
}

// ---------------------------------------------------------------------------
// Serialization round trips
// ---------------------------------------------------------------------------

namespace {

std::string random_text(std::mt19937& rng) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz \"\\{}:,\n";
    std::uniform_int_distribution<std::size_t> len(1, 40);
    std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
    std::string s;
    const std::size_t want = len(rng);
    while (s.size() < want) s.push_back(alphabet[pick(rng)]);
    if (s.find_first_not_of(" \n") == std::string::npos) s = "x" + s;
    return s;
}

TestCase random_case(std::mt19937& rng, int i) {
    std::uniform_int_distribution<int> stage_pick(0, 3);
    const Stage stage = kAllStages[stage_pick(rng)];
    CasePayload payload;
    switch (stage) {
        case Stage::StoryConsistency:
            payload = StoryPair{random_text(rng), random_text(rng), random_text(rng),
                                random_text(rng)};
            break;
        case Stage::ImplicitAssociation:
            payload = QuestionPair{random_text(rng), random_text(rng), random_text(rng)};
            break;
        default:
            payload = SingleQuestion{random_text(rng), random_text(rng)};
            break;
    }
    return TestCase::make("case-" + std::to_string(i), stage, "gender", "classroom-management",
                          payload);
}

}  // namespace

TEST_CASE("serialization round-trip is the identity on all fields") {
    std::mt19937 rng(1234);
    for (int i = 0; i < 200; ++i) {
        const TestCase original = random_case(rng, i);
        const TestCase decoded = json::parse(json(original).dump()).get<TestCase>();
        CHECK(decoded == original);
    }

    std::uniform_int_distribution<int> score(1, 5);
    std::uniform_real_distribution<double> temp(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Transcript t;
        t.run_id = "run-" + std::to_string(i);
        t.case_id = "case-" + std::to_string(i);
        t.model = random_text(rng);
        t.responses = {random_text(rng)};
        if (i % 2 == 0) t.responses.push_back(random_text(rng));
        t.sampling = {temp(rng), 256 + i};
        t.cache_hit.assign(t.responses.size(), i % 3 == 0);
        t.created_at = "2026-08-09T01:02:03Z";
        CHECK(json::parse(json(t).dump()).get<Transcript>() == t);

        RubricEvaluation e;
        e.case_id = t.case_id;
        e.metric = kAllMetrics[static_cast<std::size_t>(i % 5)];
        e.score = score(rng);
        e.explanation = random_text(rng);
        e.evaluator_model = "judge";
        e.prompt_method = i % 2 ? PromptMethod::ZeroShotExplainableCoT
                                : PromptMethod::ZeroShotExplainable;
        e.evaluator_temperature = temp(rng);
        e.prompt_hash = util::sha256_hex(e.explanation);
        CHECK(json::parse(json(e).dump()).get<RubricEvaluation>() == e);

        HumanAnnotation a{t.case_id, e.metric, "annotator-" + std::to_string(i % 3), score(rng)};
        CHECK(json::parse(json(a).dump()).get<HumanAnnotation>() == a);
    }

    StageScorecard card;
    card.model = "model-y";
    card.entries[{Stage::DirectInquiry, "gender", MetricKind::ICS}] = 60.0;
    card.entries[{Stage::StoryConsistency, "subject", MetricKind::PCS}] = 100.0 / 3.0;
    CHECK(json::parse(json(card).dump()).get<StageScorecard>() == card);

    for (const auto& f : bundled_registry().factors()) {
        CHECK(json::parse(json(f).dump()).get<SensitiveFactor>() == f);
    }
    for (const auto& s : bundled_registry().scenarios()) {
        CHECK(json::parse(json(s).dump()).get<Scenario>() == s);
    }
}

TEST_CASE("prompt method labels") {
    CHECK(prompt_method_label(PromptMethod::ZeroShotExplainable) == "zero-shot");
    CHECK(prompt_method_label(PromptMethod::ZeroShotExplainableCoT) == "cot");
    CHECK(parse_prompt_method("zero-shot") == PromptMethod::ZeroShotExplainable);
    CHECK(parse_prompt_method("cot") == PromptMethod::ZeroShotExplainableCoT);
    CHECK_THROWS_AS(parse_prompt_method("few-shot"), ValidationError);
}
