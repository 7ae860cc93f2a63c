#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairaudit/analysis.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/domain.hpp"
#include "fairaudit/evaluator.hpp"
#include "fairaudit/util.hpp"

namespace py = pybind11;
using namespace fairaudit;

namespace {

py::dict registry_dict(const Registry& reg) {
    py::list factors;
    for (const auto& f : reg.factors()) {
        py::dict d;
        d["id"] = f.id;
        d["name"] = f.name;
        d["description"] = f.description;
        factors.append(std::move(d));
    }
    py::list scenarios;
    for (const auto& s : reg.scenarios()) {
        py::dict d;
        d["id"] = s.id;
        d["name"] = s.name;
        d["factors"] = s.applicable_factors;
        scenarios.append(std::move(d));
    }
    py::dict out;
    out["factors"] = std::move(factors);
    out["scenarios"] = std::move(scenarios);
    return out;
}

evaluator::EvalInputs inputs_from_dict(MetricKind metric, const py::dict& inputs) {
    auto get = [&](const char* key) { return inputs[key].cast<std::string>(); };
    switch (metric) {
        case MetricKind::ICS:
            return evaluator::IcsInputs{get("question"), get("actual_answer"),
                                        get("expected_output")};
        case MetricKind::TCS:
        case MetricKind::PCS:
        case MetricKind::ETCS:
            return evaluator::StoryPairInputs{get("story_a"), get("story_b")};
        case MetricKind::SBAS:
            return evaluator::SbasInputs{get("question_a"), get("answer_a"), get("question_b"),
                                         get("answer_b")};
    }
    throw Error("invalid metric");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "fairaudit core operations: registry, datasets, prompts, parsing, statistics";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_ValueError);
    py::register_exception<StatsError>(m, "StatsError", PyExc_ValueError);
    py::register_exception<EvalParseError>(m, "EvalParseError", PyExc_ValueError);

    m.def("slugify", &util::slugify, py::arg("name"));

    m.def(
        "registry_load",
        [](const std::string& path) { return registry_dict(registry_load(path)); },
        py::arg("path") = std::string(),
        "Load the bundled factor/scenario registry (or a sidecar file).");

    m.def(
        "build_generation_prompt",
        [](const std::string& purpose, const std::string& methodology, const std::string& scenario,
           const std::string& factor) {
            return dataset::build_generation_prompt({purpose, methodology, scenario, factor});
        },
        py::arg("purpose"), py::arg("methodology"), py::arg("scenario"), py::arg("factor"));

    m.def(
        "validate_dataset",
        [](const std::string& path, const std::string& registry_path) {
            const auto data = dataset::load_dataset(path, registry_load(registry_path));
            return py::make_tuple(data.size(), data.manifest_digest);
        },
        py::arg("path"), py::arg("registry_path") = std::string(),
        "Load and validate a dataset; returns (size, digest).");

    m.def(
        "dataset_stats",
        [](const std::string& path, const std::string& registry_path) {
            const auto registry = registry_load(registry_path);
            const auto data = dataset::load_dataset(path, registry);
            py::dict out;
            for (const auto& [key, count] : dataset::dataset_stats(data, registry)) {
                out[py::make_tuple(key.first, stage_label(key.second))] = count;
            }
            return out;
        },
        py::arg("path"), py::arg("registry_path") = std::string());

    m.def(
        "sample_dataset",
        [](const std::string& path, double fraction, std::uint64_t seed,
           const std::string& out_path, const std::string& registry_path) {
            const auto data = dataset::load_dataset(path, registry_load(registry_path));
            const auto sampled = dataset::sample_dataset(data, fraction, seed);
            if (!out_path.empty()) dataset::save_dataset(sampled, out_path);
            py::list ids;
            for (const auto& c : sampled.cases) ids.append(c.id);
            return ids;
        },
        py::arg("path"), py::arg("fraction"), py::arg("seed"), py::arg("out_path") = std::string(),
        py::arg("registry_path") = std::string());

    m.def(
        "build_eval_prompt",
        [](const std::string& metric, const py::dict& inputs, const std::string& method) {
            const MetricKind m_kind = parse_metric(metric);
            return evaluator::build_eval_prompt(m_kind, inputs_from_dict(m_kind, inputs),
                                                parse_prompt_method(method));
        },
        py::arg("metric"), py::arg("inputs"), py::arg("method") = "zero-shot");

    m.def("cot_block", &evaluator::cot_block);

    m.def(
        "parse_evaluation",
        [](const std::string& text) {
            const auto [score, explanation] = evaluator::parse_evaluation(text);
            return py::make_tuple(score, explanation);
        },
        py::arg("text"), "Extract (score, explanation) from evaluator output.");

    m.def(
        "stage_performance",
        [](const std::vector<int>& scores, const std::string& stage) {
            const Stage s = parse_stage(stage);
            const MetricKind metric = metrics_for_stage(s).front();
            std::vector<RubricEvaluation> evals;
            evals.reserve(scores.size());
            for (int v : scores) {
                RubricEvaluation e;
                e.case_id = "case-" + std::to_string(evals.size());
                e.metric = metric;
                e.score = v;
                e.evaluator_model = "adhoc";
                evals.push_back(std::move(e));
            }
            return analysis::stage_performance(evals, s, metric, analysis::ThresholdPolicy());
        },
        py::arg("scores"), py::arg("stage"),
        "Passing percentage of `scores` under the default threshold policy.");

    m.def("pearson", &analysis::pearson, py::arg("x"), py::arg("y"));
    m.def("spearman", &analysis::spearman, py::arg("x"), py::arg("y"));
    m.def("kendall_tau", &analysis::kendall_tau, py::arg("x"), py::arg("y"));
    m.def("weighted_kappa", &analysis::weighted_kappa, py::arg("a"), py::arg("b"));

    m.def(
        "box_stats",
        [](const std::vector<double>& values) {
            const auto b = analysis::box_stats(values);
            py::dict out;
            out["median"] = b.median;
            out["q1"] = b.q1;
            out["q3"] = b.q3;
            out["iqr"] = b.iqr;
            out["whisker_low"] = b.whisker_low;
            out["whisker_high"] = b.whisker_high;
            out["outliers"] = b.outliers;
            return out;
        },
        py::arg("values"));
}
