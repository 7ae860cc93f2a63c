#include "fairaudit/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "fairaudit/embedded_data.hpp"
#include "fairaudit/util.hpp"

namespace fairaudit::evaluator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Rubric scales
// ---------------------------------------------------------------------------

namespace {

std::map<MetricKind, RubricScale> load_scales() {
    const json doc = json::parse(embedded::kRubrics);
    std::map<MetricKind, RubricScale> scales;
    for (MetricKind m : kAllMetrics) {
        const json& entry = doc.at(metric_label(m));
        RubricScale scale;
        scale.metric = m;
        scale.name = entry.at("name").get<std::string>();
        scale.definition = entry.at("definition").get<std::string>();
        const json& levels = entry.at("levels");
        if (levels.size() != 5) {
            throw IntegrityError("rubric data: metric " + metric_label(m) + " must carry 5 levels");
        }
        for (int i = 1; i <= 5; ++i) {
            scale.levels[static_cast<std::size_t>(i - 1)] =
                levels.at(std::to_string(i)).get<std::string>();
        }
        scales[m] = std::move(scale);
    }
    return scales;
}

const std::map<MetricKind, RubricScale>& scales() {
    static const auto s = load_scales();
    return s;
}

std::string_view template_for(MetricKind metric) {
    switch (metric) {
        case MetricKind::ICS: return embedded::kTemplateIcs;
        case MetricKind::TCS: return embedded::kTemplateTcs;
        case MetricKind::PCS: return embedded::kTemplatePcs;
        case MetricKind::ETCS: return embedded::kTemplateEtcs;
        case MetricKind::SBAS: return embedded::kTemplateSbas;
    }
    throw Error("invalid metric");
}

}  // namespace

const RubricScale& rubric_scale(MetricKind metric) { return scales().at(metric); }

std::string cot_block() {
    return std::string(util::trim(std::string(embedded::kTemplateCot))) + "\n\n";
}

std::string build_eval_prompt(MetricKind metric, const EvalInputs& inputs, PromptMethod method) {
    const bool ics_inputs = std::holds_alternative<IcsInputs>(inputs);
    const bool story_inputs = std::holds_alternative<StoryPairInputs>(inputs);
    const bool sbas_inputs = std::holds_alternative<SbasInputs>(inputs);

    const bool story_metric = metric == MetricKind::TCS || metric == MetricKind::PCS ||
                              metric == MetricKind::ETCS;
    if ((metric == MetricKind::ICS && !ics_inputs) || (story_metric && !story_inputs) ||
        (metric == MetricKind::SBAS && !sbas_inputs)) {
        throw ValidationError("inputs", "input variant does not match metric " +
                                            metric_label(metric));
    }

    const RubricScale& scale = rubric_scale(metric);
    std::string text(template_for(metric));
    util::substitute_placeholder(text, "metric_name", scale.name);
    util::substitute_placeholder(text, "definition", scale.definition);
    for (int i = 1; i <= 5; ++i) {
        util::substitute_placeholder(text, "level_" + std::to_string(i),
                                     scale.levels[static_cast<std::size_t>(i - 1)]);
    }

    auto require = [&](const char* field, const std::string& value) -> const std::string& {
        if (util::trim(value).empty()) {
            throw ValidationError(field, std::string("evaluation input '") + field + "' is empty");
        }
        return value;
    };

    if (ics_inputs) {
        const auto& in = std::get<IcsInputs>(inputs);
        util::substitute_placeholder(text, "question", require("question", in.question));
        util::substitute_placeholder(text, "actual_answer",
                                     require("actual_answer", in.actual_answer));
        util::substitute_placeholder(text, "expected_output",
                                     require("expected_output", in.expected_output));
    } else if (story_inputs) {
        const auto& in = std::get<StoryPairInputs>(inputs);
        util::substitute_placeholder(text, "story_a", require("story_a", in.story_a));
        util::substitute_placeholder(text, "story_b", require("story_b", in.story_b));
    } else {
        const auto& in = std::get<SbasInputs>(inputs);
        util::substitute_placeholder(text, "question_a", require("question_a", in.question_a));
        util::substitute_placeholder(text, "answer_a", require("answer_a", in.answer_a));
        util::substitute_placeholder(text, "question_b", require("question_b", in.question_b));
        util::substitute_placeholder(text, "answer_b", require("answer_b", in.answer_b));
    }

    util::substitute_placeholder(
        text, "cot", method == PromptMethod::ZeroShotExplainableCoT ? cot_block() : "");
    return text;
}

// ---------------------------------------------------------------------------
// Judgment parsing
// ---------------------------------------------------------------------------

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// integers on `Score:` lines, in order of appearance
std::vector<long> primary_score_candidates(const std::string& text) {
    std::vector<long> values;
    util::for_each_line(text, [&](std::size_t, std::string_view line) {
        const std::string lower = lowercase(line);
        std::size_t pos = lower.find_first_not_of(" \t");
        if (pos == std::string::npos || lower.compare(pos, 5, "score") != 0) return;
        pos += 5;
        while (pos < lower.size() && std::isspace(static_cast<unsigned char>(lower[pos]))) ++pos;
        if (pos >= lower.size() || lower[pos] != ':') return;
        ++pos;
        while (pos < lower.size() && std::isspace(static_cast<unsigned char>(lower[pos]))) ++pos;
        std::size_t end = pos;
        if (end < lower.size() && (lower[end] == '-' || lower[end] == '+')) ++end;
        while (end < lower.size() && std::isdigit(static_cast<unsigned char>(lower[end]))) ++end;
        if (end == pos || !std::isdigit(static_cast<unsigned char>(lower[end - 1]))) return;
        values.push_back(std::stol(std::string(line.substr(pos, end - pos))));
    });
    return values;
}

std::optional<std::string> explanation_after_label(const std::string& text) {
    const std::string lower = lowercase(text);
    const std::size_t pos = lower.find("explanation");
    if (pos == std::string::npos) return std::nullopt;
    std::size_t p = pos + std::string("explanation").size();
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    if (p >= text.size() || text[p] != ':') return std::nullopt;
    ++p;
    return util::trim(std::string_view(text).substr(p));
}

// first standalone integer 1..5 starting within `window` chars after `from`
std::optional<int> standalone_small_int(const std::string& text, std::size_t from,
                                        std::size_t window) {
    const std::size_t limit = std::min(text.size(), from + window);
    for (std::size_t i = from; i < limit; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        std::size_t end = i;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
        const bool prev_digitish =
            i > 0 && (std::isdigit(static_cast<unsigned char>(text[i - 1])) ||
                      (text[i - 1] == '.' && i > 1 &&
                       std::isdigit(static_cast<unsigned char>(text[i - 2]))));
        const bool next_decimal = end < text.size() && text[end] == '.' &&
                                  end + 1 < text.size() &&
                                  std::isdigit(static_cast<unsigned char>(text[end + 1]));
        const std::size_t len = end - i;
        if (!prev_digitish && !next_decimal && len == 1) {
            const int v = text[i] - '0';
            if (v >= 1 && v <= 5) return v;
        }
        i = end;
    }
    return std::nullopt;
}

}  // namespace

std::pair<int, std::string> parse_evaluation(const std::string& text) {
    const auto primary = primary_score_candidates(text);
    if (!primary.empty()) {
        for (long v : primary) {
            if (v < 1 || v > 5) {
                throw EvalParseError(EvalParseErrorKind::OutOfRange,
                                     "score " + std::to_string(v) + " lies outside 1..5");
            }
        }
        std::set<long> distinct(primary.begin(), primary.end());
        if (distinct.size() > 1) {
            throw EvalParseError(EvalParseErrorKind::Ambiguous,
                                 "multiple distinct Score: lines found");
        }
        const int score = static_cast<int>(primary.front());
        if (auto expl = explanation_after_label(text)) return {score, std::move(*expl)};
        return {score, util::trim(text)};
    }

    // fallback: first standalone 1..5 near "score" or "rate"
    const std::string lower = lowercase(text);
    for (const char* word : {"score", "rate"}) {
        std::size_t pos = 0;
        while ((pos = lower.find(word, pos)) != std::string::npos) {
            const std::size_t after = pos + std::strlen(word);
            if (auto v = standalone_small_int(text, after, 40)) {
                return {*v, util::trim(text)};
            }
            pos = after;
        }
    }
    throw EvalParseError(EvalParseErrorKind::NoScore, "no score found in evaluator output");
}

// ---------------------------------------------------------------------------
// Transcript evaluation
// ---------------------------------------------------------------------------

namespace {

EvalInputs inputs_for(MetricKind metric, const TestCase& test_case,
                      const Transcript& transcript) {
    switch (metric) {
        case MetricKind::ICS: {
            const auto& p = std::get<SingleQuestion>(test_case.payload);
            return IcsInputs{p.question, transcript.responses.at(0), p.expected_output};
        }
        case MetricKind::TCS:
        case MetricKind::PCS:
        case MetricKind::ETCS:
            return StoryPairInputs{transcript.responses.at(0), transcript.responses.at(1)};
        case MetricKind::SBAS: {
            const auto& p = std::get<QuestionPair>(test_case.payload);
            return SbasInputs{p.question_a, transcript.responses.at(0), p.question_b,
                              transcript.responses.at(1)};
        }
    }
    throw Error("invalid metric");
}

}  // namespace

EvaluateResult evaluate_transcript(const TestCase& test_case, const Transcript& transcript,
                                   const EvaluatorProfile& profile, gateway::Gateway& gw,
                                   const std::string& run_id) {
    if (transcript.case_id != test_case.id) {
        throw ValidationError("case_id", "transcript for case '" + transcript.case_id +
                                             "' does not belong to case '" + test_case.id + "'");
    }
    transcript.validate_against(test_case.stage);

    EvaluateResult result;
    for (MetricKind metric : metrics_for_stage(test_case.stage)) {
        std::string prompt;
        try {
            prompt = build_eval_prompt(metric, inputs_for(metric, test_case, transcript),
                                       profile.method);
        } catch (const ValidationError& e) {
            result.unevaluated.emplace_back(metric, e.what());
            continue;
        }

        auto query = [&](double temperature) -> std::pair<int, std::string> {
            gateway::ChatRequest req;
            req.model = profile.model.name;
            req.user_text = prompt;
            req.temperature = temperature;
            req.max_tokens = profile.model.max_tokens;
            auto [text, hit] = gw.cached_complete(req, run_id);
            (void)hit;
            return parse_evaluation(text);
        };

        RubricEvaluation eval;
        eval.case_id = test_case.id;
        eval.metric = metric;
        eval.evaluator_model = profile.model.name;
        eval.prompt_method = profile.method;
        eval.prompt_hash = util::sha256_hex(prompt);
        try {
            std::tie(eval.score, eval.explanation) = query(profile.temperature);
            eval.evaluator_temperature = profile.temperature;
        } catch (const EvalParseError&) {
            // identical re-queries at temperature 0 cannot change the answer;
            // one re-query at 0.1, then the metric is flagged unevaluated
            try {
                std::tie(eval.score, eval.explanation) = query(0.1);
                eval.evaluator_temperature = 0.1;
            } catch (const EvalParseError& e2) {
                result.unevaluated.emplace_back(metric, e2.what());
                continue;
            }
        }
        eval.validate();
        result.evaluations.push_back(std::move(eval));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Suite evaluation
// ---------------------------------------------------------------------------

std::vector<RubricEvaluation> load_evaluations(const runner::RunStore& store) {
    std::vector<RubricEvaluation> out;
    const auto path = store.evaluations_path();
    if (!std::filesystem::exists(path)) return out;
    const std::string content = util::read_file(path);
    util::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
        try {
            out.push_back(json::parse(line).get<RubricEvaluation>());
        } catch (const std::exception& e) {
            throw IntegrityError(std::string("evaluations: bad record: ") + e.what(), line_no);
        }
    });
    return out;
}

EvaluateSuiteSummary evaluate_suite(const dataset::Dataset& data, runner::RunStore& store,
                                    const EvaluatorProfile& profile, gateway::Gateway& gw,
                                    const std::string& run_id) {
    EvaluateSuiteSummary summary;

    std::map<std::string, Transcript> transcripts;
    for (auto& t : store.load_transcripts()) transcripts.emplace(t.case_id, std::move(t));

    std::vector<RubricEvaluation> existing = load_evaluations(store);
    std::set<std::tuple<std::string, MetricKind, PromptMethod>> have;
    for (const auto& e : existing) have.insert({e.case_id, e.metric, e.prompt_method});

    struct Job {
        const TestCase* test_case;
        const Transcript* transcript;
    };
    std::vector<Job> jobs;
    for (const auto& c : data.cases) {
        const auto it = transcripts.find(c.id);
        if (it == transcripts.end()) continue;  // failed during run; ledger has it
        const bool all_present = std::all_of(
            metrics_for_stage(c.stage).begin(), metrics_for_stage(c.stage).end(),
            [&](MetricKind m) { return have.count({c.id, m, profile.method}) != 0; });
        if (all_present) {
            summary.skipped += metrics_for_stage(c.stage).size();
            continue;
        }
        jobs.push_back({&c, &it->second});
    }

    std::mutex result_mu;
    std::vector<RubricEvaluation> fresh;
    std::vector<nlohmann::json> unevaluated;
    std::atomic<std::size_t> next{0};

    const int workers = std::max(1, std::min<int>(gw.max_in_flight(),
                                                  static_cast<int>(jobs.size() ? jobs.size() : 1)));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                const Job& job = jobs[i];
                try {
                    EvaluateResult r =
                        evaluate_transcript(*job.test_case, *job.transcript, profile, gw, run_id);
                    std::lock_guard lock(result_mu);
                    for (auto& e : r.evaluations) fresh.push_back(std::move(e));
                    for (auto& [metric, reason] : r.unevaluated) {
                        unevaluated.push_back(json{{"case_id", job.test_case->id},
                                                   {"metric", metric_label(metric)},
                                                   {"method", prompt_method_label(profile.method)},
                                                   {"reason", reason}});
                    }
                } catch (const std::exception& e) {
                    std::lock_guard lock(result_mu);
                    for (MetricKind m : metrics_for_stage(job.test_case->stage)) {
                        unevaluated.push_back(json{{"case_id", job.test_case->id},
                                                   {"metric", metric_label(m)},
                                                   {"method", prompt_method_label(profile.method)},
                                                   {"reason", e.what()}});
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();

    summary.evaluated = fresh.size();
    summary.unevaluated = unevaluated.size();

    // compact: existing + fresh, canonical order, atomic rewrite
    for (auto& e : fresh) existing.push_back(std::move(e));
    std::sort(existing.begin(), existing.end(),
              [](const RubricEvaluation& a, const RubricEvaluation& b) {
                  return std::tie(a.case_id, a.metric, a.prompt_method, a.evaluator_temperature) <
                         std::tie(b.case_id, b.metric, b.prompt_method, b.evaluator_temperature);
              });
    std::string body;
    for (const auto& e : existing) {
        body += json(e).dump();
        body += '\n';
    }
    util::write_file_atomic(store.evaluations_path(), body);

    std::string ledger;
    for (const auto& u : unevaluated) {
        ledger += u.dump();
        ledger += '\n';
    }
    util::write_file_atomic(store.unevaluated_path(), ledger);
    return summary;
}

}  // namespace fairaudit::evaluator
