#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

// ---------------------------------------------------------------------------
// Stages and metrics
// ---------------------------------------------------------------------------

/// The four probe stages, serialized as "S1".."S4".
enum class Stage { DirectInquiry, StoryConsistency, ImplicitAssociation, UnknownSituation };

inline constexpr Stage kAllStages[] = {
    Stage::DirectInquiry,
    Stage::StoryConsistency,
    Stage::ImplicitAssociation,
    Stage::UnknownSituation,
};

std::string stage_label(Stage stage);
Stage parse_stage(std::string_view label);

/// The five 1-5 rubric metrics.
enum class MetricKind { ICS, TCS, PCS, ETCS, SBAS };

inline constexpr MetricKind kAllMetrics[] = {
    MetricKind::ICS, MetricKind::TCS, MetricKind::PCS, MetricKind::ETCS, MetricKind::SBAS,
};

std::string metric_label(MetricKind metric);
MetricKind parse_metric(std::string_view label);

/// Fixed stage->metric mapping: S1 -> {ICS}, S2 -> {TCS, PCS, ETCS},
/// S3 -> {SBAS}, S4 -> {ICS}.
const std::vector<MetricKind>& metrics_for_stage(Stage stage);
bool metric_legal_for_stage(MetricKind metric, Stage stage);

// ---------------------------------------------------------------------------
// Factor / scenario registry
// ---------------------------------------------------------------------------

struct SensitiveFactor {
    std::string id;           // slugified token, stable key
    std::string name;         // display casing
    std::string description;

    bool operator==(const SensitiveFactor&) const = default;
};

struct Scenario {
    std::string id;
    std::string name;
    std::vector<std::string> applicable_factors;  // factor ids, sorted

    bool operator==(const Scenario&) const = default;
};

/// The factor/scenario vocabulary a dataset is validated against.
class Registry {
public:
    Registry() = default;
    Registry(std::vector<SensitiveFactor> factors, std::vector<Scenario> scenarios);

    const std::vector<SensitiveFactor>& factors() const { return factors_; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }

    bool has_factor(const std::string& id) const;
    bool has_scenario(const std::string& id) const;
    const SensitiveFactor* factor(const std::string& id) const;
    const Scenario* scenario(const std::string& id) const;
    const SensitiveFactor* factor_by_name(const std::string& name) const;

    /// True when the scenario lists the factor as applicable.
    bool is_applicable(const std::string& factor_id, const std::string& scenario_id) const;

    bool operator==(const Registry&) const = default;

private:
    std::vector<SensitiveFactor> factors_;
    std::vector<Scenario> scenarios_;
};

/// Parse a registry from its line-delimited sidecar format. Throws
/// IntegrityError naming the offending row on duplicates, dangling factor
/// references, or malformed records.
Registry parse_registry(const std::string& content);

/// The registry bundled with the library (9 factors, 26 scenarios).
const Registry& bundled_registry();

/// Load either the bundled registry (empty path) or a sidecar file.
Registry registry_load(const std::string& path = {});

// ---------------------------------------------------------------------------
// Test cases
// ---------------------------------------------------------------------------

struct SingleQuestion {
    std::string question;
    std::string expected_output;

    bool operator==(const SingleQuestion&) const = default;
};

struct StoryPair {
    std::string prompt_a;
    std::string prompt_b;
    std::string changed_factor_note;
    std::string expected_output;

    bool operator==(const StoryPair&) const = default;
};

struct QuestionPair {
    std::string question_a;
    std::string question_b;
    std::string expected_output;

    bool operator==(const QuestionPair&) const = default;
};

using CasePayload = std::variant<SingleQuestion, StoryPair, QuestionPair>;

/// One staged probe. The payload variant is tied to the stage:
/// SingleQuestion for S1/S4, StoryPair for S2, QuestionPair for S3.
struct TestCase {
    std::string id;
    Stage stage = Stage::DirectInquiry;
    std::string factor;    // factor id
    std::string scenario;  // scenario id
    CasePayload payload;

    /// Validating factory; rejects mismatched stage/payload pairs and empty text.
    static TestCase make(std::string id, Stage stage, std::string factor,
                         std::string scenario, CasePayload payload);

    void validate() const;

    /// Number of completions this case's protocol needs (1 or 2).
    int response_arity() const { return stage == Stage::StoryConsistency ||
                                        stage == Stage::ImplicitAssociation ? 2 : 1; }

    bool operator==(const TestCase&) const = default;
};

// ---------------------------------------------------------------------------
// Transcripts, evaluations, annotations
// ---------------------------------------------------------------------------

struct SamplingParams {
    double temperature = 0.0;
    int max_tokens = 1024;

    bool operator==(const SamplingParams&) const = default;
};

/// A candidate model's response(s) to one case, with run provenance.
struct Transcript {
    std::string run_id;
    std::string case_id;
    std::string model;
    std::vector<std::string> responses;  // (A, B) order for paired stages
    SamplingParams sampling;
    std::vector<bool> cache_hit;
    std::string created_at;  // UTC ISO-8601

    void validate_against(Stage stage) const;

    bool operator==(const Transcript&) const = default;
};

enum class PromptMethod { ZeroShotExplainable, ZeroShotExplainableCoT };

std::string prompt_method_label(PromptMethod method);
PromptMethod parse_prompt_method(std::string_view label);

/// One metric's 1-5 score plus the evaluator's explanation for one transcript.
struct RubricEvaluation {
    std::string case_id;
    MetricKind metric = MetricKind::ICS;
    int score = 0;
    std::string explanation;
    std::string evaluator_model;
    PromptMethod prompt_method = PromptMethod::ZeroShotExplainable;
    double evaluator_temperature = 0.0;
    std::string prompt_hash;

    void validate() const;

    bool operator==(const RubricEvaluation&) const = default;
};

struct HumanAnnotation {
    std::string case_id;
    MetricKind metric = MetricKind::ICS;
    std::string annotator_id;
    int score = 0;

    void validate() const;

    bool operator==(const HumanAnnotation&) const = default;
};

/// (stage, factor id, metric) -> performance percentage.
struct StageScorecard {
    using CellKey = std::tuple<Stage, std::string, MetricKind>;

    std::string model;
    std::map<CellKey, double> entries;

    bool operator==(const StageScorecard&) const = default;
};

// ---------------------------------------------------------------------------
// JSON serialization (round-trip identity on all fields)
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const SensitiveFactor& f);
void from_json(const nlohmann::json& j, SensitiveFactor& f);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);
void to_json(nlohmann::json& j, const TestCase& c);
void from_json(const nlohmann::json& j, TestCase& c);
void to_json(nlohmann::json& j, const Transcript& t);
void from_json(const nlohmann::json& j, Transcript& t);
void to_json(nlohmann::json& j, const RubricEvaluation& e);
void from_json(const nlohmann::json& j, RubricEvaluation& e);
void to_json(nlohmann::json& j, const HumanAnnotation& a);
void from_json(const nlohmann::json& j, HumanAnnotation& a);
void to_json(nlohmann::json& j, const StageScorecard& s);
void from_json(const nlohmann::json& j, StageScorecard& s);

}  // namespace fairaudit
