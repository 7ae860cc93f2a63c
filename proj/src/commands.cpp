#include "fairaudit/commands.hpp"

#include <functional>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "fairaudit/analysis.hpp"
#include "fairaudit/config.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/evaluator.hpp"
#include "fairaudit/reporting.hpp"
#include "fairaudit/runner.hpp"
#include "fairaudit/util.hpp"

namespace fairaudit::commands {

using nlohmann::json;

namespace {

int run_guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const GatewayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == GatewayErrorKind::Config ? kExitConfig : kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

config::AuditConfig load_config_checked(const Options& opt) {
    if (opt.config_path.empty()) {
        throw ValidationError("config", "no config file given (use --config)");
    }
    if (!std::filesystem::exists(opt.config_path)) {
        throw IoError("config file not found: " + opt.config_path);
    }
    return config::load_config(opt.config_path);
}

Registry load_registry(const config::AuditConfig& cfg) {
    return registry_load(cfg.registry_path.string());
}

std::filesystem::path dataset_path(const config::AuditConfig& cfg, const Options& opt) {
    const std::filesystem::path path = opt.dataset.empty() ? cfg.dataset_path
                                                           : std::filesystem::path(opt.dataset);
    if (path.empty()) {
        throw ValidationError("dataset", "no dataset configured (paths.dataset or --dataset)");
    }
    if (!std::filesystem::exists(path)) {
        throw IoError("dataset not found: " + path.string());
    }
    return path;
}

dataset::Dataset load_data(const config::AuditConfig& cfg, const Options& opt,
                           const Registry& registry) {
    return dataset::load_dataset(dataset_path(cfg, opt), registry);
}

std::vector<std::string> selected_models(const config::AuditConfig& cfg, const Options& opt) {
    if (opt.models.empty()) {
        if (cfg.candidates.empty()) {
            throw ValidationError("candidates", "config lists no candidate models");
        }
        return cfg.candidates;
    }
    for (const auto& m : opt.models) cfg.model(m);  // must be configured
    return opt.models;
}

std::filesystem::path store_dir(const config::AuditConfig& cfg, const std::string& run_id,
                                const std::string& model) {
    return cfg.run_dir / run_id / util::slugify(model);
}

runner::RunStore open_store_checked(const config::AuditConfig& cfg, const Options& opt,
                                    const std::string& model) {
    runner::RunStore store(store_dir(cfg, opt.run_id, model));
    if (!store.exists()) {
        throw IoError("run store not found: " + store.transcripts_path().string() +
                      " (produce it with: fairaudit run --config " + opt.config_path +
                      " --run-id " + opt.run_id + ")");
    }
    return store;
}

evaluator::EvaluatorProfile evaluator_profile(const config::AuditConfig& cfg, const Options& opt) {
    if (cfg.evaluator_model.empty()) {
        throw ValidationError("evaluator", "config does not define an evaluator model");
    }
    evaluator::EvaluatorProfile prof;
    prof.model = cfg.model(cfg.evaluator_model);
    prof.method = opt.method ? parse_prompt_method(*opt.method) : cfg.evaluator_method;
    prof.temperature = cfg.evaluator_temperature;
    return prof;
}

std::string read_store_digest(const runner::RunStore& store) {
    if (!std::filesystem::exists(store.meta_path())) return "";
    return json::parse(util::read_file(store.meta_path())).value("store_digest", "");
}

report::ReportMeta report_meta(const config::AuditConfig& cfg, const Options& opt,
                               const dataset::Dataset& data,
                               const std::vector<std::string>& models) {
    report::ReportMeta meta;
    meta.run_id = opt.run_id;
    meta.dataset_digest = data.manifest_digest;
    meta.config_digest = cfg.config_digest;
    meta.thresholds = cfg.thresholds.describe();
    for (const auto& m : models) {
        runner::RunStore store(store_dir(cfg, opt.run_id, m));
        const std::string digest = read_store_digest(store);
        if (!digest.empty()) meta.store_digests[m] = digest;
    }
    return meta;
}

std::vector<HumanAnnotation> load_annotations(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("annotations file not found: " + path.string());
    }
    const std::string content = util::read_file(path);
    std::vector<HumanAnnotation> out;
    util::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
        HumanAnnotation a;
        if (!line.empty() && line.front() == '{') {
            try {
                a = json::parse(line).get<HumanAnnotation>();
            } catch (const std::exception& e) {
                throw IntegrityError(std::string("annotations: bad record: ") + e.what(), line_no);
            }
        } else {
            // comma-delimited: case_id,metric,annotator_id,score
            std::vector<std::string> fields;
            std::size_t start = 0;
            const std::string text(line);
            for (std::size_t i = 0; i <= text.size(); ++i) {
                if (i == text.size() || text[i] == ',') {
                    fields.push_back(util::trim(text.substr(start, i - start)));
                    start = i + 1;
                }
            }
            if (line_no == 1 && !fields.empty() && fields[0] == "case_id") return;  // header
            if (fields.size() != 4) {
                throw IntegrityError("annotations: expected 4 comma-delimited fields", line_no);
            }
            a.case_id = fields[0];
            a.metric = parse_metric(fields[1]);
            a.annotator_id = fields[2];
            try {
                a.score = std::stoi(fields[3]);
            } catch (const std::exception&) {
                throw IntegrityError("annotations: score is not an integer", line_no);
            }
        }
        a.validate();
        out.push_back(std::move(a));
    });
    return out;
}

std::vector<RubricEvaluation> pooled_evaluations(const config::AuditConfig& cfg,
                                                 const Options& opt,
                                                 const std::vector<std::string>& models) {
    std::vector<RubricEvaluation> pooled;
    for (const auto& m : models) {
        runner::RunStore store(store_dir(cfg, opt.run_id, m));
        auto evals = evaluator::load_evaluations(store);
        pooled.insert(pooled.end(), evals.begin(), evals.end());
    }
    return pooled;
}

}  // namespace

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const Options& opt) {
    return run_guarded([&]() -> int {
        // usage validation precedes any model traffic
        for (const auto& [flag, value] :
             std::initializer_list<std::pair<const char*, const std::string*>>{
                 {"--purpose", &opt.gen_purpose},
                 {"--methodology", &opt.gen_methodology},
                 {"--scenario", &opt.gen_scenario},
                 {"--factor", &opt.gen_factor}}) {
            if (util::trim(*value).empty()) {
                std::cerr << "usage error: " << flag << " must be non-empty\n";
                return kExitConfig;
            }
        }
        if (opt.gen_count < 1) {
            std::cerr << "usage error: --count must be >= 1\n";
            return kExitConfig;
        }

        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const Stage stage = parse_stage(opt.gen_stage);

        const SensitiveFactor* factor = registry.factor(opt.gen_factor);
        if (factor == nullptr) {
            throw ValidationError("factor", "unknown factor id '" + opt.gen_factor + "'");
        }
        const Scenario* scenario = registry.scenario(opt.gen_scenario);
        if (scenario == nullptr) {
            throw ValidationError("scenario", "unknown scenario id '" + opt.gen_scenario + "'");
        }
        if (!registry.is_applicable(factor->id, scenario->id)) {
            throw ValidationError("scenario", "factor '" + factor->id +
                                                  "' is not applicable to scenario '" +
                                                  scenario->id + "'");
        }
        if (cfg.generator_model.empty()) {
            throw ValidationError("generator", "config does not define a generator model");
        }

        dataset::GenerationSpec spec{opt.gen_purpose, opt.gen_methodology, scenario->name,
                                     factor->name};
        const std::string prompt =
            dataset::build_generation_prompt(spec) +
            dataset::generation_format_instruction(stage, opt.gen_count, factor->id, scenario->id);

        auto built = config::build_gateway(cfg);
        const auto& prof = cfg.model(cfg.generator_model);
        gateway::ChatRequest req;
        req.model = prof.name;
        req.system_text = prof.system_text;
        req.user_text = prompt;
        req.temperature = prof.temperature;
        req.max_tokens = prof.max_tokens;
        const std::string output = built.gw->complete(req);

        auto candidates = dataset::parse_generated_cases(output, registry);
        std::set<std::string> ids;
        std::string quarantine, rejects;
        std::size_t ok = 0, bad = 0;
        for (auto& cand : candidates) {
            if (cand.test_case && !ids.insert(cand.test_case->id).second) {
                cand.test_case.reset();
                cand.reject_reason = "duplicate id within generator output";
            }
            if (cand.test_case) {
                quarantine += json(*cand.test_case).dump();
                quarantine += '\n';
                ++ok;
            } else {
                rejects += json{{"line", cand.raw_line}, {"reason", cand.reject_reason}}.dump();
                rejects += '\n';
                ++bad;
            }
        }

        const std::filesystem::path out_path =
            opt.out.empty() ? cfg.run_dir / "quarantine.jsonl" : std::filesystem::path(opt.out);
        if (ok == 0) {
            std::cerr << "error: generator produced no parsable cases (" << bad << " rejected)\n";
            return kExitConfig;
        }
        util::write_file_atomic(out_path, quarantine);
        std::cout << "quarantined " << ok << " cases -> " << out_path.string() << "\n";
        if (bad > 0) {
            const auto reject_path = out_path.string() + ".rejects";
            util::write_file_atomic(reject_path, rejects);
            std::cout << "rejected " << bad << " lines -> " << reject_path << "\n";
            return kExitPartial;
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// validate-data / stats / sample
// ---------------------------------------------------------------------------

int cmd_validate_data(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        std::cout << "ok: " << data.size() << " cases, digest " << data.manifest_digest << "\n";
        return kExitOk;
    });
}

int cmd_stats(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto counts = dataset::dataset_stats(data, registry);

        std::string out = "factor,S1,S2,S3,S4,total\n";
        std::size_t grand_total = 0;
        for (const auto& f : registry.factors()) {
            std::size_t row_total = 0;
            out += f.id;
            for (Stage s : kAllStages) {
                const std::size_t n = counts.at({f.id, s});
                out += "," + std::to_string(n);
                row_total += n;
            }
            out += "," + std::to_string(row_total) + "\n";
            grand_total += row_total;
        }
        out += "total,,,,," + std::to_string(grand_total) + "\n";

        if (opt.out.empty()) {
            std::cout << out;
        } else {
            util::write_file_atomic(opt.out, out);
            std::cout << "wrote " << opt.out << "\n";
        }
        return kExitOk;
    });
}

int cmd_sample(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);

        double fraction = opt.fraction.value_or(cfg.sample ? cfg.sample->fraction : 0.0);
        std::uint64_t seed = opt.seed.value_or(cfg.sample ? cfg.sample->seed : 0);
        if (fraction == 0.0) {
            throw ValidationError("fraction", "no sample fraction given (--fraction or config)");
        }

        const auto sampled = dataset::sample_dataset(data, fraction, seed);
        const std::filesystem::path out_path =
            opt.out.empty()
                ? dataset_path(cfg, opt).replace_extension(".sample.jsonl")
                : std::filesystem::path(opt.out);
        dataset::save_dataset(sampled, out_path);
        std::cout << "sampled " << sampled.size() << " of " << data.size() << " cases -> "
                  << out_path.string() << "\n";
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// run / evaluate
// ---------------------------------------------------------------------------

int cmd_run(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto models = selected_models(cfg, opt);
        auto built = config::build_gateway(cfg);

        bool any_failed = false;
        for (const auto& model : models) {
            runner::RunStore store(store_dir(cfg, opt.run_id, model));
            runner::RunOptions run_opts;
            run_opts.resume = opt.resume;
            run_opts.workers = cfg.max_in_flight;
            run_opts.max_cases = opt.limit;
            const auto summary = runner::run_suite(data, cfg.model(model), *built.gw, opt.run_id,
                                                   store, run_opts, cfg.config_digest);
            std::cout << "run " << opt.run_id << " model " << model << ": ok=" << summary.ok
                      << " failed=" << summary.failed << " skipped=" << summary.skipped
                      << " remaining=" << summary.remaining << " store_digest="
                      << summary.store_digest << "\n";
            if (summary.failed > 0) any_failed = true;
        }
        return any_failed ? kExitPartial : kExitOk;
    });
}

int cmd_evaluate(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto models = selected_models(cfg, opt);
        const auto prof = evaluator_profile(cfg, opt);
        auto built = config::build_gateway(cfg);

        bool any_unevaluated = false;
        for (const auto& model : models) {
            auto store = open_store_checked(cfg, opt, model);
            const auto summary =
                evaluator::evaluate_suite(data, store, prof, *built.gw, opt.run_id);
            std::cout << "evaluate " << opt.run_id << " model " << model << " method "
                      << prompt_method_label(prof.method) << ": evaluated=" << summary.evaluated
                      << " skipped=" << summary.skipped << " unevaluated=" << summary.unevaluated
                      << "\n";
            if (summary.unevaluated > 0) any_unevaluated = true;
        }
        return any_unevaluated ? kExitPartial : kExitOk;
    });
}

// ---------------------------------------------------------------------------
// scorecard / correlate / report
// ---------------------------------------------------------------------------

int cmd_scorecard(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto models = selected_models(cfg, opt);
        const auto meta = report_meta(cfg, opt, data, models);

        const std::filesystem::path dir =
            opt.out.empty() ? cfg.report_dir / opt.run_id : std::filesystem::path(opt.out);
        std::filesystem::create_directories(dir);

        for (const auto& model : models) {
            auto store = open_store_checked(cfg, opt, model);
            const auto evals = evaluator::load_evaluations(store);
            if (evals.empty()) {
                throw IoError("no evaluations in " + store.evaluations_path().string() +
                              " (produce them with: fairaudit evaluate)");
            }
            const auto card = analysis::scorecard(evals, data, model, cfg.thresholds);
            const std::string slug = util::slugify(model);
            util::write_file_atomic(dir / ("scorecard_" + slug + ".csv"),
                                    report::render_scorecard_csv(card, meta));
            util::write_file_atomic(dir / ("scorecard_" + slug + ".md"),
                                    report::render_scorecard_markdown(card, meta));
            std::cout << "scorecard " << model << " -> "
                      << (dir / ("scorecard_" + slug + ".csv")).string() << "\n";
        }
        return kExitOk;
    });
}

int cmd_correlate(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto models = selected_models(cfg, opt);

        if (opt.annotations.empty()) {
            throw ValidationError("annotations", "no annotations file given (--annotations)");
        }
        const auto annotations = load_annotations(opt.annotations);
        const auto means = analysis::aggregate_human(annotations);
        const auto pooled = pooled_evaluations(cfg, opt, models);
        if (pooled.empty()) {
            throw IoError("no evaluations found under " + (cfg.run_dir / opt.run_id).string() +
                          " (produce them with: fairaudit evaluate)");
        }

        const auto rows = analysis::correlation_report(pooled, means);
        const auto meta = report_meta(cfg, opt, data, models);

        const std::filesystem::path dir =
            opt.out.empty() ? cfg.report_dir / opt.run_id : std::filesystem::path(opt.out);
        std::filesystem::create_directories(dir);
        util::write_file_atomic(dir / "correlations.csv",
                                report::render_correlations_csv(rows, meta));
        util::write_file_atomic(dir / "correlations.md",
                                report::render_correlations_markdown(rows, meta));

        json rows_json = json::array();
        for (const auto& row : rows) {
            json r{{"metric", metric_label(row.metric)},
                   {"method", prompt_method_label(row.prompt_method)},
                   {"temperature", row.evaluator_temperature},
                   {"n", row.n}};
            if (row.r) r["r"] = *row.r;
            if (row.rho) r["rho"] = *row.rho;
            if (row.tau) r["tau"] = *row.tau;
            if (row.kappa) r["kappa"] = *row.kappa;
            rows_json.push_back(std::move(r));
        }
        util::write_file_atomic(dir / "correlations.json", rows_json.dump(2) + "\n");
        std::cout << "correlations: " << rows.size() << " groups -> "
                  << (dir / "correlations.csv").string() << "\n";
        return kExitOk;
    });
}

int cmd_report(const Options& opt) {
    return run_guarded([&]() -> int {
        const auto cfg = load_config_checked(opt);
        const Registry registry = load_registry(cfg);
        const auto data = load_data(cfg, opt, registry);
        const auto models = selected_models(cfg, opt);

        report::ReportBundle bundle;
        bundle.meta = report_meta(cfg, opt, data, models);
        for (const auto& model : models) {
            auto store = open_store_checked(cfg, opt, model);
            const auto evals = evaluator::load_evaluations(store);
            if (evals.empty()) {
                throw IoError("no evaluations in " + store.evaluations_path().string() +
                              " (produce them with: fairaudit evaluate)");
            }
            bundle.scorecards.push_back(analysis::scorecard(evals, data, model, cfg.thresholds));
            for (auto& row : report::box_summaries(evals, data, model)) {
                bundle.box_summaries.push_back(std::move(row));
            }
        }

        const std::filesystem::path dir =
            opt.out.empty() ? cfg.report_dir / opt.run_id : std::filesystem::path(opt.out);

        // fold in correlation rows when a prior `correlate` left them here
        const auto corr_path = dir / "correlations.json";
        if (std::filesystem::exists(corr_path)) {
            for (const auto& row : json::parse(util::read_file(corr_path))) {
                analysis::CorrelationResult r;
                r.metric = parse_metric(row.at("metric").get<std::string>());
                r.prompt_method = parse_prompt_method(row.at("method").get<std::string>());
                r.evaluator_temperature = row.at("temperature").get<double>();
                r.n = row.at("n").get<std::size_t>();
                if (row.contains("r")) r.r = row.at("r").get<double>();
                if (row.contains("rho")) r.rho = row.at("rho").get<double>();
                if (row.contains("tau")) r.tau = row.at("tau").get<double>();
                if (row.contains("kappa")) r.kappa = row.at("kappa").get<double>();
                bundle.correlations.push_back(std::move(r));
            }
        }

        const auto written = report::write_report_bundle(bundle, dir);
        for (const auto& path : written) std::cout << "wrote " << path.string() << "\n";
        return kExitOk;
    });
}

int cmd_all(const Options& opt) {
    int worst = kExitOk;
    for (const auto& step : {cmd_run, cmd_evaluate}) {
        const int rc = step(opt);
        if (rc == kExitConfig) return rc;
        worst = std::max(worst, rc);
    }
    if (!opt.annotations.empty()) {
        const int rc = cmd_correlate(opt);
        if (rc == kExitConfig) return rc;
        worst = std::max(worst, rc);
    }
    const int rc = cmd_report(opt);
    if (rc == kExitConfig) return rc;
    return std::max(worst, rc);
}

}  // namespace fairaudit::commands
