#include "fairaudit/reporting.hpp"

#include <algorithm>
#include <map>

#include "fairaudit/util.hpp"

namespace fairaudit::report {

using nlohmann::json;

bool operator==(const ReportBundle& a, const ReportBundle& b) {
    return a.meta == b.meta && a.scorecards == b.scorecards &&
           a.box_summaries == b.box_summaries && a.correlations == b.correlations;
}

namespace {

std::string provenance_header(const ReportMeta& meta, const std::string& comment) {
    std::string out;
    out += comment + " run_id: " + meta.run_id + "\n";
    out += comment + " dataset_digest: " + meta.dataset_digest + "\n";
    out += comment + " config_digest: " + meta.config_digest + "\n";
    out += comment + " thresholds: " + meta.thresholds + "\n";
    for (const auto& [model, digest] : meta.store_digests) {
        out += comment + " store_digest[" + model + "]: " + digest + "\n";
    }
    return out;
}

// fixed column order mirroring the per-factor scorecard rows
const std::vector<std::pair<Stage, MetricKind>>& cell_columns() {
    static const std::vector<std::pair<Stage, MetricKind>> cols{
        {Stage::DirectInquiry, MetricKind::ICS},
        {Stage::StoryConsistency, MetricKind::TCS},
        {Stage::StoryConsistency, MetricKind::PCS},
        {Stage::StoryConsistency, MetricKind::ETCS},
        {Stage::ImplicitAssociation, MetricKind::SBAS},
        {Stage::UnknownSituation, MetricKind::ICS},
    };
    return cols;
}

std::vector<std::string> card_factors(const StageScorecard& card) {
    std::vector<std::string> factors;
    for (const auto& [key, value] : card.entries) {
        const auto& f = std::get<1>(key);
        if (std::find(factors.begin(), factors.end(), f) == factors.end()) factors.push_back(f);
    }
    std::sort(factors.begin(), factors.end());
    return factors;
}

}  // namespace

std::string render_scorecard_csv(const StageScorecard& card, const ReportMeta& meta) {
    std::string out = provenance_header(meta, "#");
    out += "# model: " + card.model + "\n";
    out += "factor,stage,metric,percentage\n";
    for (const auto& factor : card_factors(card)) {
        for (const auto& [stage, metric] : cell_columns()) {
            const auto it = card.entries.find({stage, factor, metric});
            if (it == card.entries.end()) continue;  // absent cells stay absent
            out += factor + "," + stage_label(stage) + "," + metric_label(metric) + "," +
                   util::format_percent(it->second) + "\n";
        }
    }
    return out;
}

std::string render_scorecard_markdown(const StageScorecard& card, const ReportMeta& meta) {
    std::string out = "# Scorecard: " + card.model + "\n\n";
    out += provenance_header(meta, ">");
    out += "\n| Factor |";
    for (const auto& [stage, metric] : cell_columns()) {
        out += " " + stage_label(stage) + " " + metric_label(metric) + " |";
    }
    out += "\n|---|";
    for (std::size_t i = 0; i < cell_columns().size(); ++i) out += "---|";
    out += "\n";
    for (const auto& factor : card_factors(card)) {
        out += "| " + factor + " |";
        for (const auto& [stage, metric] : cell_columns()) {
            const auto it = card.entries.find({stage, factor, metric});
            out += it == card.entries.end() ? " - |" : " " + util::format_percent(it->second) + " |";
        }
        out += "\n";
    }
    return out;
}

std::string render_box_csv(const std::vector<BoxSummaryRow>& rows, const ReportMeta& meta) {
    std::string out = provenance_header(meta, "#");
    out += "model,stage,n,median,q1,q3,iqr,whisker_low,whisker_high,outliers\n";
    for (const auto& row : rows) {
        out += row.model + "," + stage_label(row.stage) + "," + std::to_string(row.n) + "," +
               util::format_percent(row.stats.median) + "," + util::format_percent(row.stats.q1) +
               "," + util::format_percent(row.stats.q3) + "," + util::format_percent(row.stats.iqr) +
               "," + util::format_percent(row.stats.whisker_low) + "," +
               util::format_percent(row.stats.whisker_high) + ",";
        for (std::size_t i = 0; i < row.stats.outliers.size(); ++i) {
            if (i) out += ';';
            out += util::format_percent(row.stats.outliers[i]);
        }
        out += "\n";
    }
    return out;
}

std::string render_box_markdown(const std::vector<BoxSummaryRow>& rows, const ReportMeta& meta) {
    std::string out = "# Score distribution (per-case scores as percentages)\n\n";
    out += provenance_header(meta, ">");
    out += "\n| Model | Stage | n | Median | Q1 | Q3 | IQR | Whisker low | Whisker high | Outliers |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        out += "| " + row.model + " | " + stage_label(row.stage) + " | " + std::to_string(row.n) +
               " | " + util::format_percent(row.stats.median) + " | " +
               util::format_percent(row.stats.q1) + " | " + util::format_percent(row.stats.q3) +
               " | " + util::format_percent(row.stats.iqr) + " | " +
               util::format_percent(row.stats.whisker_low) + " | " +
               util::format_percent(row.stats.whisker_high) + " | " +
               std::to_string(row.stats.outliers.size()) + " |\n";
    }
    return out;
}

namespace {

std::string opt_coeff(const std::optional<double>& v) {
    return v ? util::format_coefficient(*v) : "";
}

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", t);
    return buf;
}

}  // namespace

std::string render_correlations_csv(const std::vector<analysis::CorrelationResult>& rows,
                                    const ReportMeta& meta) {
    std::string out = provenance_header(meta, "#");
    out += "metric,method,temperature,n,r,rho,tau,kappa\n";
    for (const auto& row : rows) {
        out += metric_label(row.metric) + "," + prompt_method_label(row.prompt_method) + "," +
               format_temperature(row.evaluator_temperature) + "," + std::to_string(row.n) + "," +
               opt_coeff(row.r) + "," + opt_coeff(row.rho) + "," + opt_coeff(row.tau) + "," +
               opt_coeff(row.kappa) + "\n";
    }
    return out;
}

std::string render_correlations_markdown(const std::vector<analysis::CorrelationResult>& rows,
                                         const ReportMeta& meta) {
    std::string out = "# Correlation with human annotations\n\n";
    out += provenance_header(meta, ">");
    out += "\n| Metric | Method | Temperature | n | r | rho | tau | kappa |\n";
    out += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        auto cell = [](const std::optional<double>& v) {
            return v ? util::format_coefficient(*v) : std::string("-");
        };
        out += "| " + metric_label(row.metric) + " | " + prompt_method_label(row.prompt_method) +
               " | " + format_temperature(row.evaluator_temperature) + " | " +
               std::to_string(row.n) + " | " + cell(row.r) + " | " + cell(row.rho) + " | " +
               cell(row.tau) + " | " + cell(row.kappa) + " |\n";
    }
    return out;
}

std::string render_summary_markdown(const ReportBundle& bundle) {
    std::string out = "# Audit summary\n\n";
    out += provenance_header(bundle.meta, ">");
    out += "\nModels: ";
    for (std::size_t i = 0; i < bundle.scorecards.size(); ++i) {
        if (i) out += ", ";
        out += bundle.scorecards[i].model;
    }
    out += "\n\n";
    for (const auto& card : bundle.scorecards) {
        out += render_scorecard_markdown(card, bundle.meta);
        out += "\n";
    }
    if (!bundle.box_summaries.empty()) {
        out += render_box_markdown(bundle.box_summaries, bundle.meta);
        out += "\n";
    }
    if (!bundle.correlations.empty()) {
        out += render_correlations_markdown(bundle.correlations, bundle.meta);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structured form
// ---------------------------------------------------------------------------

json bundle_to_json(const ReportBundle& bundle) {
    json meta{{"run_id", bundle.meta.run_id},
              {"dataset_digest", bundle.meta.dataset_digest},
              {"config_digest", bundle.meta.config_digest},
              {"thresholds", bundle.meta.thresholds},
              {"store_digests", bundle.meta.store_digests}};

    json cards = json::array();
    for (const auto& card : bundle.scorecards) cards.push_back(json(card));

    json boxes = json::array();
    for (const auto& row : bundle.box_summaries) {
        boxes.push_back(json{{"model", row.model},
                             {"stage", stage_label(row.stage)},
                             {"n", row.n},
                             {"median", row.stats.median},
                             {"q1", row.stats.q1},
                             {"q3", row.stats.q3},
                             {"iqr", row.stats.iqr},
                             {"whisker_low", row.stats.whisker_low},
                             {"whisker_high", row.stats.whisker_high},
                             {"outliers", row.stats.outliers}});
    }

    json correlations = json::array();
    for (const auto& row : bundle.correlations) {
        json r{{"metric", metric_label(row.metric)},
               {"method", prompt_method_label(row.prompt_method)},
               {"temperature", row.evaluator_temperature},
               {"n", row.n}};
        if (row.r) r["r"] = *row.r;
        if (row.rho) r["rho"] = *row.rho;
        if (row.tau) r["tau"] = *row.tau;
        if (row.kappa) r["kappa"] = *row.kappa;
        correlations.push_back(std::move(r));
    }

    return json{{"meta", std::move(meta)},
                {"scorecards", std::move(cards)},
                {"box_summaries", std::move(boxes)},
                {"correlations", std::move(correlations)}};
}

ReportBundle bundle_from_json(const json& j) {
    ReportBundle bundle;
    const json& meta = j.at("meta");
    bundle.meta.run_id = meta.at("run_id").get<std::string>();
    bundle.meta.dataset_digest = meta.at("dataset_digest").get<std::string>();
    bundle.meta.config_digest = meta.at("config_digest").get<std::string>();
    bundle.meta.thresholds = meta.at("thresholds").get<std::string>();
    bundle.meta.store_digests =
        meta.at("store_digests").get<std::map<std::string, std::string>>();

    for (const auto& card : j.at("scorecards")) {
        bundle.scorecards.push_back(card.get<StageScorecard>());
    }
    for (const auto& row : j.at("box_summaries")) {
        BoxSummaryRow b;
        b.model = row.at("model").get<std::string>();
        b.stage = parse_stage(row.at("stage").get<std::string>());
        b.n = row.at("n").get<std::size_t>();
        b.stats.median = row.at("median").get<double>();
        b.stats.q1 = row.at("q1").get<double>();
        b.stats.q3 = row.at("q3").get<double>();
        b.stats.iqr = row.at("iqr").get<double>();
        b.stats.whisker_low = row.at("whisker_low").get<double>();
        b.stats.whisker_high = row.at("whisker_high").get<double>();
        b.stats.outliers = row.at("outliers").get<std::vector<double>>();
        bundle.box_summaries.push_back(std::move(b));
    }
    for (const auto& row : j.at("correlations")) {
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
    return bundle;
}

std::vector<std::filesystem::path> write_report_bundle(const ReportBundle& bundle,
                                                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::filesystem::path& name, const std::string& content) {
        const auto path = dir / name;
        util::write_file_atomic(path, content);
        written.push_back(path);
    };

    for (const auto& card : bundle.scorecards) {
        const std::string slug = util::slugify(card.model);
        emit("scorecard_" + slug + ".csv", render_scorecard_csv(card, bundle.meta));
        emit("scorecard_" + slug + ".md", render_scorecard_markdown(card, bundle.meta));
    }
    if (!bundle.box_summaries.empty()) {
        emit("box.csv", render_box_csv(bundle.box_summaries, bundle.meta));
        emit("box.md", render_box_markdown(bundle.box_summaries, bundle.meta));
    }
    if (!bundle.correlations.empty()) {
        emit("correlations.csv", render_correlations_csv(bundle.correlations, bundle.meta));
        emit("correlations.md", render_correlations_markdown(bundle.correlations, bundle.meta));
    }
    emit("report.json", bundle_to_json(bundle).dump(2) + "\n");
    emit("summary.md", render_summary_markdown(bundle));
    return written;
}

std::vector<BoxSummaryRow> box_summaries(const std::vector<RubricEvaluation>& evals,
                                         const dataset::Dataset& data, const std::string& model) {
    // per-case percentage equivalent: mean of the case's metric scores * 20
    std::map<std::pair<Stage, std::string>, std::pair<double, std::size_t>> per_case;
    for (const auto& e : evals) {
        const TestCase* c = data.find(e.case_id);
        if (c == nullptr) {
            throw IntegrityError("box summary: evaluation references unknown case '" + e.case_id +
                                 "'");
        }
        auto& [sum, count] = per_case[{c->stage, e.case_id}];
        sum += e.score;
        ++count;
    }

    std::map<Stage, std::vector<double>> values;
    for (const auto& [key, sc] : per_case) {
        values[key.first].push_back(sc.first / static_cast<double>(sc.second) * 20.0);
    }

    std::vector<BoxSummaryRow> rows;
    for (Stage s : kAllStages) {
        const auto it = values.find(s);
        if (it == values.end()) continue;
        BoxSummaryRow row;
        row.model = model;
        row.stage = s;
        row.n = it->second.size();
        row.stats = analysis::box_stats(it->second);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fairaudit::report
