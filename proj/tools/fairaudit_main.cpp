// fairaudit: staged bias audits for LLM-generated text.
#include <CLI11.hpp>

#include "fairaudit/commands.hpp"

using fairaudit::commands::Options;

int main(int argc, char** argv) {
    CLI::App app{"fairaudit: staged bias audits for LLM-generated text"};
    app.require_subcommand(1);

    Options opt;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* flag = cmd->add_option("--config,-c", opt.config_path, "audit config file (JSON)");
        if (needs_config) flag->required();
        cmd->add_option("--run-id", opt.run_id, "run identifier (default: 'default')");
        cmd->add_option("--model", opt.models, "restrict to these candidate models");
        cmd->add_option("--method", opt.method, "evaluator prompt method")
            ->check(CLI::IsMember({"zero-shot", "cot"}));
        cmd->add_flag("--resume", opt.resume, "skip cases already persisted");
        cmd->add_option("--out", opt.out, "output path override");
        cmd->add_option("--dataset", opt.dataset, "dataset path override");
    };

    auto* generate = app.add_subcommand("generate", "build a generation prompt, query the "
                                                    "generator model, quarantine candidate cases");
    add_common(generate);
    generate->add_option("--purpose", opt.gen_purpose, "test purpose text")->required();
    generate->add_option("--methodology", opt.gen_methodology, "test methodology text")->required();
    generate->add_option("--scenario", opt.gen_scenario, "scenario id")->required();
    generate->add_option("--factor", opt.gen_factor, "sensitive factor id")->required();
    generate->add_option("--stage", opt.gen_stage, "stage for generated cases (S1..S4)")
        ->check(CLI::IsMember({"S1", "S2", "S3", "S4"}));
    generate->add_option("--count", opt.gen_count, "cases to request per prompt (default 10)");

    add_common(app.add_subcommand("validate-data", "load and validate a dataset file"));
    add_common(app.add_subcommand("stats", "per-(factor, stage) case counts"));

    auto* sample = app.add_subcommand("sample", "deterministic sample of a dataset");
    add_common(sample);
    sample->add_option("--fraction", opt.fraction, "fraction in (0, 1]");
    sample->add_option("--seed", opt.seed, "sampling seed");

    auto* run = app.add_subcommand("run", "execute the dataset against candidate models");
    add_common(run);
    run->add_option("--limit", opt.limit, "process at most N pending cases, then stop");

    add_common(app.add_subcommand("evaluate", "score transcripts with the evaluator model"));
    add_common(app.add_subcommand("scorecard", "aggregate evaluations into fairness scorecards"));

    auto* correlate = app.add_subcommand("correlate",
                                         "correlate automated scores with human annotations");
    add_common(correlate);
    correlate->add_option("--annotations", opt.annotations, "human annotations file (csv or jsonl)")
        ->required();

    add_common(app.add_subcommand("report", "render the full report bundle"));

    auto* all = app.add_subcommand("all", "run + evaluate (+ correlate) + report");
    add_common(all);
    all->add_option("--annotations", opt.annotations, "human annotations file (csv or jsonl)");
    all->add_option("--limit", opt.limit, "process at most N pending cases, then stop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fairaudit::commands::kExitConfig;
    }

    using fairaudit::commands::Options;
    const std::map<std::string, int (*)(const Options&)> dispatch{
        {"generate", fairaudit::commands::cmd_generate},
        {"validate-data", fairaudit::commands::cmd_validate_data},
        {"stats", fairaudit::commands::cmd_stats},
        {"sample", fairaudit::commands::cmd_sample},
        {"run", fairaudit::commands::cmd_run},
        {"evaluate", fairaudit::commands::cmd_evaluate},
        {"scorecard", fairaudit::commands::cmd_scorecard},
        {"correlate", fairaudit::commands::cmd_correlate},
        {"report", fairaudit::commands::cmd_report},
        {"all", fairaudit::commands::cmd_all},
    };
    return dispatch.at(app.get_subcommands().front()->get_name())(opt);
}
