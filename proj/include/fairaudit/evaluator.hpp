#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fairaudit/domain.hpp"
#include "fairaudit/gateway.hpp"
#include "fairaudit/runner.hpp"

namespace fairaudit::evaluator {

/// A metric's definition and its five level descriptions, byte-identical to
/// the bundled rubric data.
struct RubricScale {
    MetricKind metric = MetricKind::ICS;
    std::string name;
    std::string definition;
    std::array<std::string, 5> levels;  // levels[i] describes score i+1
};

/// Bundled scale for a metric (loaded once, validated to have 5 levels).
const RubricScale& rubric_scale(MetricKind metric);

// Per-metric prompt inputs.
struct IcsInputs {
    std::string question;
    std::string actual_answer;
    std::string expected_output;
};

struct StoryPairInputs {  // TCS / PCS / ETCS
    std::string story_a;
    std::string story_b;
};

struct SbasInputs {
    std::string question_a;
    std::string answer_a;
    std::string question_b;
    std::string answer_b;
};

using EvalInputs = std::variant<IcsInputs, StoryPairInputs, SbasInputs>;

/// Assemble the explainable zero-shot evaluation prompt for `metric`:
/// explanation requirement, verbatim definition and scale, labeled target
/// texts, then the mandatory `Score:`/`Explanation:` format instruction.
/// The CoT method inserts the step-by-step block before the format
/// instruction and changes nothing else.
std::string build_eval_prompt(MetricKind metric, const EvalInputs& inputs,
                              PromptMethod method);

/// The exact block the CoT method inserts.
std::string cot_block();

/// Extract (score, explanation) from evaluator output.
/// Primary grammar: a `Score:` line holding an integer 1-5 plus the text
/// after `Explanation:`. Fallback: first standalone integer 1-5 within 40
/// characters after "score" or "rate" (case-insensitive), full text as
/// explanation. Throws EvalParseError (NoScore / OutOfRange / Ambiguous).
std::pair<int, std::string> parse_evaluation(const std::string& text);

struct EvaluatorProfile {
    gateway::ModelProfile model;
    PromptMethod method = PromptMethod::ZeroShotExplainable;
    double temperature = 0.0;
};

struct EvaluateResult {
    std::vector<RubricEvaluation> evaluations;
    /// (metric, reason) pairs that stayed unevaluated after the retry policy.
    std::vector<std::pair<MetricKind, std::string>> unevaluated;
};

/// Score one transcript on every metric of its stage (one evaluator call per
/// metric). Unparsable judgments get a single re-query at temperature 0.1;
/// evaluations that still fail are reported as unevaluated, not thrown.
EvaluateResult evaluate_transcript(const TestCase& test_case, const Transcript& transcript,
                                   const EvaluatorProfile& profile, gateway::Gateway& gw,
                                   const std::string& run_id);

struct EvaluateSuiteSummary {
    std::size_t evaluated = 0;    // evaluation records written
    std::size_t unevaluated = 0;  // flagged metrics
    std::size_t skipped = 0;      // already present for this method (resume)

    bool success() const { return unevaluated == 0; }
};

/// Evaluate every transcript in the store, appending to the evaluations
/// ledger. Existing (case, metric, method) records are kept and skipped.
EvaluateSuiteSummary evaluate_suite(const dataset::Dataset& data, runner::RunStore& store,
                                    const EvaluatorProfile& profile, gateway::Gateway& gw,
                                    const std::string& run_id);

std::vector<RubricEvaluation> load_evaluations(const runner::RunStore& store);

}  // namespace fairaudit::evaluator
