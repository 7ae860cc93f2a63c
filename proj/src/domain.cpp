#include "fairaudit/domain.hpp"

#include <algorithm>
#include <set>

#include "fairaudit/embedded_data.hpp"
#include "fairaudit/util.hpp"

namespace fairaudit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Stage / metric labels
// ---------------------------------------------------------------------------

std::string stage_label(Stage stage) {
    switch (stage) {
        case Stage::DirectInquiry: return "S1";
        case Stage::StoryConsistency: return "S2";
        case Stage::ImplicitAssociation: return "S3";
        case Stage::UnknownSituation: return "S4";
    }
    throw Error("invalid stage");
}

Stage parse_stage(std::string_view label) {
    if (label == "S1") return Stage::DirectInquiry;
    if (label == "S2") return Stage::StoryConsistency;
    if (label == "S3") return Stage::ImplicitAssociation;
    if (label == "S4") return Stage::UnknownSituation;
    throw ValidationError("stage", "unknown stage label: " + std::string(label));
}

std::string metric_label(MetricKind metric) {
    switch (metric) {
        case MetricKind::ICS: return "ICS";
        case MetricKind::TCS: return "TCS";
        case MetricKind::PCS: return "PCS";
        case MetricKind::ETCS: return "ETCS";
        case MetricKind::SBAS: return "SBAS";
    }
    throw Error("invalid metric");
}

MetricKind parse_metric(std::string_view label) {
    if (label == "ICS") return MetricKind::ICS;
    if (label == "TCS") return MetricKind::TCS;
    if (label == "PCS") return MetricKind::PCS;
    if (label == "ETCS") return MetricKind::ETCS;
    if (label == "SBAS") return MetricKind::SBAS;
    throw ValidationError("metric", "unknown metric label: " + std::string(label));
}

const std::vector<MetricKind>& metrics_for_stage(Stage stage) {
    static const std::vector<MetricKind> s1{MetricKind::ICS};
    static const std::vector<MetricKind> s2{MetricKind::TCS, MetricKind::PCS, MetricKind::ETCS};
    static const std::vector<MetricKind> s3{MetricKind::SBAS};
    static const std::vector<MetricKind> s4{MetricKind::ICS};
    switch (stage) {
        case Stage::DirectInquiry: return s1;
        case Stage::StoryConsistency: return s2;
        case Stage::ImplicitAssociation: return s3;
        case Stage::UnknownSituation: return s4;
    }
    throw Error("invalid stage");
}

bool metric_legal_for_stage(MetricKind metric, Stage stage) {
    const auto& ms = metrics_for_stage(stage);
    return std::find(ms.begin(), ms.end(), metric) != ms.end();
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

Registry::Registry(std::vector<SensitiveFactor> factors, std::vector<Scenario> scenarios)
    : factors_(std::move(factors)), scenarios_(std::move(scenarios)) {
    for (auto& s : scenarios_) {
        std::sort(s.applicable_factors.begin(), s.applicable_factors.end());
    }
}

bool Registry::has_factor(const std::string& id) const { return factor(id) != nullptr; }
bool Registry::has_scenario(const std::string& id) const { return scenario(id) != nullptr; }

const SensitiveFactor* Registry::factor(const std::string& id) const {
    for (const auto& f : factors_) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

const Scenario* Registry::scenario(const std::string& id) const {
    for (const auto& s : scenarios_) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

const SensitiveFactor* Registry::factor_by_name(const std::string& name) const {
    for (const auto& f : factors_) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

bool Registry::is_applicable(const std::string& factor_id, const std::string& scenario_id) const {
    const Scenario* s = scenario(scenario_id);
    if (s == nullptr) return false;
    return std::binary_search(s->applicable_factors.begin(), s->applicable_factors.end(),
                              factor_id);
}

Registry parse_registry(const std::string& content) {
    std::vector<SensitiveFactor> factors;
    std::vector<Scenario> scenarios;
    std::set<std::string> factor_ids;
    std::set<std::string> scenario_ids;

    util::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IntegrityError(std::string("registry: malformed record: ") + e.what(), line_no);
        }
        const std::string type = j.value("type", "");
        if (type == "factor") {
            SensitiveFactor f = j.get<SensitiveFactor>();
            if (f.id.empty() || f.name.empty()) {
                throw IntegrityError("registry: factor with empty id or name", line_no);
            }
            if (!factor_ids.insert(f.id).second) {
                throw IntegrityError("registry: duplicate factor id '" + f.id + "'", line_no);
            }
            factors.push_back(std::move(f));
        } else if (type == "scenario") {
            Scenario s = j.get<Scenario>();
            if (s.id.empty() || s.name.empty()) {
                throw IntegrityError("registry: scenario with empty id or name", line_no);
            }
            if (!scenario_ids.insert(s.id).second) {
                throw IntegrityError("registry: duplicate scenario id '" + s.id + "'", line_no);
            }
            if (s.applicable_factors.empty()) {
                throw IntegrityError("registry: scenario '" + s.id + "' lists no factors",
                                     line_no);
            }
            scenarios.push_back(std::move(s));
        } else {
            throw IntegrityError("registry: unknown record type '" + type + "'", line_no);
        }
    });

    // factor references must resolve (scenarios may precede factors, so check last)
    for (const auto& s : scenarios) {
        for (const auto& fid : s.applicable_factors) {
            if (factor_ids.count(fid) == 0) {
                throw IntegrityError("registry: scenario '" + s.id + "' references unknown factor '" +
                                     fid + "'");
            }
        }
    }
    return Registry(std::move(factors), std::move(scenarios));
}

const Registry& bundled_registry() {
    static const Registry reg = parse_registry(std::string(embedded::kRegistry));
    return reg;
}

Registry registry_load(const std::string& path) {
    if (path.empty()) return bundled_registry();
    return parse_registry(util::read_file(path));
}

// ---------------------------------------------------------------------------
// TestCase
// ---------------------------------------------------------------------------

namespace {

void require_nonempty(const std::string& field, const std::string& value,
                      const std::string& case_id) {
    if (util::trim(value).empty()) {
        throw ValidationError(field, "case '" + case_id + "': field '" + field + "' is empty");
    }
}

}  // namespace

TestCase TestCase::make(std::string id, Stage stage, std::string factor, std::string scenario,
                        CasePayload payload) {
    TestCase c{std::move(id), stage, std::move(factor), std::move(scenario), std::move(payload)};
    c.validate();
    return c;
}

void TestCase::validate() const {
    if (util::trim(id).empty()) throw ValidationError("id", "test case with empty id");
    require_nonempty("factor", factor, id);
    require_nonempty("scenario", scenario, id);

    const bool single = std::holds_alternative<SingleQuestion>(payload);
    const bool story = std::holds_alternative<StoryPair>(payload);
    const bool pair = std::holds_alternative<QuestionPair>(payload);
    const bool single_stage =
        stage == Stage::DirectInquiry || stage == Stage::UnknownSituation;

    if ((single && !single_stage) || (story && stage != Stage::StoryConsistency) ||
        (pair && stage != Stage::ImplicitAssociation)) {
        throw ValidationError("payload", "case '" + id + "': payload variant does not match stage " +
                                             stage_label(stage));
    }

    if (single) {
        const auto& p = std::get<SingleQuestion>(payload);
        require_nonempty("question", p.question, id);
        require_nonempty("expected_output", p.expected_output, id);
    } else if (story) {
        const auto& p = std::get<StoryPair>(payload);
        require_nonempty("prompt_a", p.prompt_a, id);
        require_nonempty("prompt_b", p.prompt_b, id);
        require_nonempty("changed_factor_note", p.changed_factor_note, id);
        require_nonempty("expected_output", p.expected_output, id);
    } else {
        const auto& p = std::get<QuestionPair>(payload);
        require_nonempty("question_a", p.question_a, id);
        require_nonempty("question_b", p.question_b, id);
        require_nonempty("expected_output", p.expected_output, id);
    }
}

// ---------------------------------------------------------------------------
// Transcript / evaluation / annotation validation
// ---------------------------------------------------------------------------

void Transcript::validate_against(Stage stage) const {
    const std::size_t want =
        (stage == Stage::StoryConsistency || stage == Stage::ImplicitAssociation) ? 2 : 1;
    if (responses.size() != want) {
        throw ValidationError("responses", "transcript for case '" + case_id + "': expected " +
                                               std::to_string(want) + " responses for " +
                                               stage_label(stage) + ", got " +
                                               std::to_string(responses.size()));
    }
    if (!cache_hit.empty() && cache_hit.size() != responses.size()) {
        throw ValidationError("cache_hit", "transcript for case '" + case_id +
                                               "': cache_hit flag count mismatch");
    }
}

std::string prompt_method_label(PromptMethod method) {
    return method == PromptMethod::ZeroShotExplainable ? "zero-shot" : "cot";
}

PromptMethod parse_prompt_method(std::string_view label) {
    if (label == "zero-shot") return PromptMethod::ZeroShotExplainable;
    if (label == "cot") return PromptMethod::ZeroShotExplainableCoT;
    throw ValidationError("method", "unknown prompt method: " + std::string(label));
}

void RubricEvaluation::validate() const {
    if (score < 1 || score > 5) {
        throw ValidationError("score", "evaluation for case '" + case_id + "': score " +
                                           std::to_string(score) + " outside 1..5");
    }
    if (evaluator_temperature < 0) {
        throw ValidationError("evaluator_temperature", "negative evaluator temperature");
    }
}

void HumanAnnotation::validate() const {
    if (score < 1 || score > 5) {
        throw ValidationError("score", "annotation for case '" + case_id + "': score " +
                                           std::to_string(score) + " outside 1..5");
    }
    if (util::trim(annotator_id).empty()) {
        throw ValidationError("annotator_id", "annotation with empty annotator id");
    }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

void to_json(json& j, const SensitiveFactor& f) {
    j = json{{"type", "factor"}, {"id", f.id}, {"name", f.name}, {"description", f.description}};
}

void from_json(const json& j, SensitiveFactor& f) {
    j.at("id").get_to(f.id);
    j.at("name").get_to(f.name);
    f.description = j.value("description", "");
}

void to_json(json& j, const Scenario& s) {
    j = json{{"type", "scenario"}, {"id", s.id}, {"name", s.name}, {"factors", s.applicable_factors}};
}

void from_json(const json& j, Scenario& s) {
    j.at("id").get_to(s.id);
    j.at("name").get_to(s.name);
    j.at("factors").get_to(s.applicable_factors);
}

void to_json(json& j, const TestCase& c) {
    j = json{{"type", "case"},
             {"id", c.id},
             {"stage", stage_label(c.stage)},
             {"factor", c.factor},
             {"scenario", c.scenario}};
    if (const auto* p = std::get_if<SingleQuestion>(&c.payload)) {
        j["question"] = p->question;
        j["expected_output"] = p->expected_output;
    } else if (const auto* p = std::get_if<StoryPair>(&c.payload)) {
        j["prompt_a"] = p->prompt_a;
        j["prompt_b"] = p->prompt_b;
        j["changed_factor_note"] = p->changed_factor_note;
        j["expected_output"] = p->expected_output;
    } else if (const auto* p = std::get_if<QuestionPair>(&c.payload)) {
        j["question_a"] = p->question_a;
        j["question_b"] = p->question_b;
        j["expected_output"] = p->expected_output;
    }
}

namespace {

std::string require_string_field(const json& j, const char* field) {
    if (!j.contains(field)) {
        throw ValidationError(field, std::string("missing required field '") + field + "'");
    }
    if (!j.at(field).is_string()) {
        throw ValidationError(field, std::string("field '") + field + "' must be a string");
    }
    return j.at(field).get<std::string>();
}

}  // namespace

void from_json(const json& j, TestCase& c) {
    c.id = require_string_field(j, "id");
    c.stage = parse_stage(require_string_field(j, "stage"));
    c.factor = require_string_field(j, "factor");
    c.scenario = require_string_field(j, "scenario");
    switch (c.stage) {
        case Stage::DirectInquiry:
        case Stage::UnknownSituation:
            c.payload = SingleQuestion{require_string_field(j, "question"),
                                       require_string_field(j, "expected_output")};
            break;
        case Stage::StoryConsistency:
            c.payload = StoryPair{require_string_field(j, "prompt_a"),
                                  require_string_field(j, "prompt_b"),
                                  require_string_field(j, "changed_factor_note"),
                                  require_string_field(j, "expected_output")};
            break;
        case Stage::ImplicitAssociation:
            c.payload = QuestionPair{require_string_field(j, "question_a"),
                                     require_string_field(j, "question_b"),
                                     require_string_field(j, "expected_output")};
            break;
    }
}

void to_json(json& j, const Transcript& t) {
    j = json{{"type", "transcript"},
             {"run_id", t.run_id},
             {"case_id", t.case_id},
             {"model", t.model},
             {"responses", t.responses},
             {"sampling", {{"temperature", t.sampling.temperature},
                           {"max_tokens", t.sampling.max_tokens}}},
             {"cache_hit", t.cache_hit},
             {"created_at", t.created_at}};
}

void from_json(const json& j, Transcript& t) {
    j.at("run_id").get_to(t.run_id);
    j.at("case_id").get_to(t.case_id);
    j.at("model").get_to(t.model);
    j.at("responses").get_to(t.responses);
    t.sampling.temperature = j.at("sampling").at("temperature").get<double>();
    t.sampling.max_tokens = j.at("sampling").at("max_tokens").get<int>();
    t.cache_hit = j.value("cache_hit", std::vector<bool>{});
    t.created_at = j.value("created_at", "");
}

void to_json(json& j, const RubricEvaluation& e) {
    j = json{{"type", "evaluation"},
             {"case_id", e.case_id},
             {"metric", metric_label(e.metric)},
             {"score", e.score},
             {"explanation", e.explanation},
             {"evaluator_model", e.evaluator_model},
             {"prompt_method", prompt_method_label(e.prompt_method)},
             {"evaluator_temperature", e.evaluator_temperature},
             {"prompt_hash", e.prompt_hash}};
}

void from_json(const json& j, RubricEvaluation& e) {
    j.at("case_id").get_to(e.case_id);
    e.metric = parse_metric(j.at("metric").get<std::string>());
    j.at("score").get_to(e.score);
    j.at("explanation").get_to(e.explanation);
    j.at("evaluator_model").get_to(e.evaluator_model);
    e.prompt_method = parse_prompt_method(j.at("prompt_method").get<std::string>());
    j.at("evaluator_temperature").get_to(e.evaluator_temperature);
    j.at("prompt_hash").get_to(e.prompt_hash);
}

void to_json(json& j, const HumanAnnotation& a) {
    j = json{{"type", "annotation"},
             {"case_id", a.case_id},
             {"metric", metric_label(a.metric)},
             {"annotator_id", a.annotator_id},
             {"score", a.score}};
}

void from_json(const json& j, HumanAnnotation& a) {
    j.at("case_id").get_to(a.case_id);
    a.metric = parse_metric(j.at("metric").get<std::string>());
    j.at("annotator_id").get_to(a.annotator_id);
    j.at("score").get_to(a.score);
}

void to_json(json& j, const StageScorecard& s) {
    json cells = json::array();
    for (const auto& [key, value] : s.entries) {
        cells.push_back(json{{"stage", stage_label(std::get<0>(key))},
                             {"factor", std::get<1>(key)},
                             {"metric", metric_label(std::get<2>(key))},
                             {"percentage", value}});
    }
    j = json{{"model", s.model}, {"cells", std::move(cells)}};
}

void from_json(const json& j, StageScorecard& s) {
    j.at("model").get_to(s.model);
    s.entries.clear();
    for (const auto& cell : j.at("cells")) {
        StageScorecard::CellKey key{parse_stage(cell.at("stage").get<std::string>()),
                                    cell.at("factor").get<std::string>(),
                                    parse_metric(cell.at("metric").get<std::string>())};
        s.entries[key] = cell.at("percentage").get<double>();
    }
}

}  // namespace fairaudit
