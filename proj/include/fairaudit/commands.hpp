#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairaudit::commands {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some cases failed or stayed unevaluated
inline constexpr int kExitConfig = 2;   // configuration / usage / missing artifact

/// Options assembled by the CLI layer; flags override config values.
struct Options {
    std::string config_path;
    std::string run_id = "default";
    std::vector<std::string> models;  // subset of config candidates; empty = all
    std::optional<std::string> method;  // "zero-shot" | "cot"
    bool resume = false;
    std::string out;       // output path override
    std::string dataset;   // dataset path override
    std::size_t limit = 0;  // run: stop after N pending cases (0 = no limit)

    // generate
    std::string gen_purpose;
    std::string gen_methodology;
    std::string gen_scenario;  // scenario id
    std::string gen_factor;    // factor id
    std::string gen_stage = "S1";
    int gen_count = 10;

    // sample
    std::optional<double> fraction;
    std::optional<std::uint64_t> seed;

    // correlate
    std::string annotations;
};

int cmd_generate(const Options& opt);
int cmd_validate_data(const Options& opt);
int cmd_stats(const Options& opt);
int cmd_sample(const Options& opt);
int cmd_run(const Options& opt);
int cmd_evaluate(const Options& opt);
int cmd_scorecard(const Options& opt);
int cmd_correlate(const Options& opt);
int cmd_report(const Options& opt);
int cmd_all(const Options& opt);

}  // namespace fairaudit::commands
