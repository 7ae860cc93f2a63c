#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/analysis.hpp"
#include "fairaudit/domain.hpp"

namespace fairaudit::report {

/// One box summary row: per (model, stage) over per-case scores mapped to
/// percentages (score * 20).
struct BoxSummaryRow {
    std::string model;
    Stage stage = Stage::DirectInquiry;
    std::size_t n = 0;
    analysis::BoxStats stats;

    bool operator==(const BoxSummaryRow&) const = default;
};

struct ReportMeta {
    std::string run_id;
    std::string dataset_digest;
    std::string config_digest;
    std::string thresholds;  // ThresholdPolicy::describe()
    std::map<std::string, std::string> store_digests;  // model -> digest

    bool operator==(const ReportMeta&) const = default;
};

/// Everything `report` renders: scorecards and box summaries per model plus
/// optional correlation rows, all under one provenance header.
struct ReportBundle {
    ReportMeta meta;
    std::vector<StageScorecard> scorecards;
    std::vector<BoxSummaryRow> box_summaries;
    std::vector<analysis::CorrelationResult> correlations;
};

bool operator==(const ReportBundle& a, const ReportBundle& b);

// Renderers. Percentage cells use exactly one decimal (half-up); correlation
// coefficients use three decimals; every file carries the provenance header.
std::string render_scorecard_csv(const StageScorecard& card, const ReportMeta& meta);
std::string render_scorecard_markdown(const StageScorecard& card, const ReportMeta& meta);
std::string render_box_csv(const std::vector<BoxSummaryRow>& rows, const ReportMeta& meta);
std::string render_box_markdown(const std::vector<BoxSummaryRow>& rows, const ReportMeta& meta);
std::string render_correlations_csv(const std::vector<analysis::CorrelationResult>& rows,
                                    const ReportMeta& meta);
std::string render_correlations_markdown(const std::vector<analysis::CorrelationResult>& rows,
                                         const ReportMeta& meta);
std::string render_summary_markdown(const ReportBundle& bundle);

/// Structured form of the whole bundle; parse() is its exact inverse.
nlohmann::json bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const nlohmann::json& j);

/// Write every render of `bundle` into `dir` (csv + json + markdown).
/// Returns the list of files written.
std::vector<std::filesystem::path> write_report_bundle(const ReportBundle& bundle,
                                                       const std::filesystem::path& dir);

/// Compute per-(model, stage) box summaries from evaluations; per-case value
/// is the mean of the case's metric scores scaled to a percentage.
std::vector<BoxSummaryRow> box_summaries(const std::vector<RubricEvaluation>& evals,
                                         const dataset::Dataset& data,
                                         const std::string& model);

}  // namespace fairaudit::report
