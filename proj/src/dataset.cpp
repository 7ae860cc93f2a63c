#include "fairaudit/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fairaudit/embedded_data.hpp"
#include "fairaudit/util.hpp"

namespace fairaudit::dataset {

using nlohmann::json;

const TestCase* Dataset::find(const std::string& case_id) const {
    for (const auto& c : cases) {
        if (c.id == case_id) return &c;
    }
    return nullptr;
}

void GenerationSpec::validate() const {
    if (util::trim(purpose).empty()) throw ValidationError("purpose", "generation spec: empty purpose");
    if (util::trim(methodology).empty()) {
        throw ValidationError("methodology", "generation spec: empty methodology");
    }
    if (util::trim(scenario).empty()) throw ValidationError("scenario", "generation spec: empty scenario");
    if (util::trim(factor).empty()) throw ValidationError("factor", "generation spec: empty factor");
}

std::string build_generation_prompt(const GenerationSpec& spec) {
    spec.validate();
    std::string text(embedded::kTemplateGeneration);
    util::substitute_placeholder(text, "purpose", spec.purpose);
    util::substitute_placeholder(text, "methodology", spec.methodology);
    util::substitute_placeholder(text, "scenario", spec.scenario);
    util::substitute_placeholder(text, "factor", spec.factor);
    return text;
}

std::string generation_format_instruction(Stage stage, int count, const std::string& factor_id,
                                          const std::string& scenario_id) {
    std::string fields;
    switch (stage) {
        case Stage::DirectInquiry:
        case Stage::UnknownSituation:
            fields = "\"question\", \"expected_output\"";
            break;
        case Stage::StoryConsistency:
            fields = "\"prompt_a\", \"prompt_b\", \"changed_factor_note\", \"expected_output\"";
            break;
        case Stage::ImplicitAssociation:
            fields = "\"question_a\", \"question_b\", \"expected_output\"";
            break;
    }
    std::string out = "\nReturn exactly " + std::to_string(count) +
                      " test cases, one JSON object per line and nothing else. Each object must "
                      "carry the fields \"id\" (unique), \"stage\" (\"" +
                      stage_label(stage) + "\"), \"factor\" (\"" + factor_id +
                      "\"), \"scenario\" (\"" + scenario_id + "\"), " + fields + ".\n";
    return out;
}

std::string manifest_digest(const std::vector<TestCase>& cases) {
    std::string canonical;
    for (const auto& c : cases) {
        canonical += json(c).dump();
        canonical += '\n';
    }
    return util::sha256_hex(canonical);
}

namespace {

void check_against_registry(const TestCase& c, const Registry& registry, std::size_t line_no) {
    if (!registry.has_factor(c.factor)) {
        throw IntegrityError("dataset: case '" + c.id + "' references unknown factor '" + c.factor +
                                 "'",
                             line_no);
    }
    if (!registry.has_scenario(c.scenario)) {
        throw IntegrityError(
            "dataset: case '" + c.id + "' references unknown scenario '" + c.scenario + "'",
            line_no);
    }
    if (!registry.is_applicable(c.factor, c.scenario)) {
        throw IntegrityError("dataset: case '" + c.id + "': factor '" + c.factor +
                                 "' is not applicable to scenario '" + c.scenario + "'",
                             line_no);
    }
}

}  // namespace

Dataset parse_dataset(const std::string& content, const Registry& registry,
                      const std::string& source_path) {
    Dataset d;
    d.source_path = source_path;
    std::set<std::string> ids;

    util::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IntegrityError(std::string("dataset: malformed record: ") + e.what(), line_no);
        }
        const std::string type = j.value("type", "case");
        if (type == "meta") {
            if (j.contains("seed")) d.provenance.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("fraction")) d.provenance.fraction = j.at("fraction").get<double>();
            if (j.contains("parent_digest")) {
                d.provenance.parent_digest = j.at("parent_digest").get<std::string>();
            }
            return;
        }
        if (type != "case") {
            throw IntegrityError("dataset: unknown record type '" + type + "'", line_no);
        }
        TestCase c;
        try {
            c = j.get<TestCase>();
            c.validate();
        } catch (const ValidationError& e) {
            throw IntegrityError(std::string("dataset: ") + e.what(), line_no);
        } catch (const json::exception& e) {
            throw IntegrityError(std::string("dataset: bad record: ") + e.what(), line_no);
        }
        if (!ids.insert(c.id).second) {
            throw IntegrityError("dataset: duplicate case id '" + c.id + "'", line_no);
        }
        check_against_registry(c, registry, line_no);
        d.cases.push_back(std::move(c));
    });

    d.manifest_digest = manifest_digest(d.cases);
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, const Registry& registry) {
    return parse_dataset(util::read_file(path), registry, path.string());
}

std::string serialize_dataset(const Dataset& d) {
    std::string out;
    if (!d.provenance.empty()) {
        json meta{{"type", "meta"}};
        if (d.provenance.seed) meta["seed"] = *d.provenance.seed;
        if (d.provenance.fraction) meta["fraction"] = *d.provenance.fraction;
        if (d.provenance.parent_digest) meta["parent_digest"] = *d.provenance.parent_digest;
        out += meta.dump();
        out += '\n';
    }
    for (const auto& c : d.cases) {
        out += json(c).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    util::write_file_atomic(path, serialize_dataset(d));
}

std::map<std::pair<std::string, Stage>, std::size_t> dataset_stats(const Dataset& d,
                                                                   const Registry& registry) {
    std::map<std::pair<std::string, Stage>, std::size_t> counts;
    for (const auto& f : registry.factors()) {
        for (Stage s : kAllStages) counts[{f.id, s}] = 0;
    }
    for (const auto& c : d.cases) {
        ++counts[{c.factor, c.stage}];
    }
    return counts;
}

Dataset sample_dataset(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ValidationError("fraction", "sample fraction must lie in (0, 1]");
    }
    if (d.cases.empty()) throw ValidationError("dataset", "cannot sample an empty dataset");

    const std::size_t n = d.cases.size();
    // epsilon guards against 0.3 * 10 -> 2.9999... style float error
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));

    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::size_t j = i + util::bounded_uniform(rng, n - i);
        std::swap(indices[i], indices[j]);
    }
    indices.resize(k);
    std::sort(indices.begin(), indices.end());  // preserve original relative order

    Dataset out;
    out.cases.reserve(k);
    for (std::size_t idx : indices) out.cases.push_back(d.cases[idx]);
    out.provenance.seed = seed;
    out.provenance.fraction = fraction;
    out.provenance.parent_digest = d.manifest_digest;
    out.manifest_digest = manifest_digest(out.cases);
    return out;
}

std::vector<ParsedCandidate> parse_generated_cases(const std::string& output,
                                                   const Registry& registry) {
    std::vector<ParsedCandidate> result;
    util::for_each_line(output, [&](std::size_t, std::string_view line) {
        ParsedCandidate cand;
        cand.raw_line = std::string(line);
        try {
            json j = json::parse(line);
            TestCase c = j.get<TestCase>();
            c.validate();
            check_against_registry(c, registry, 0);
            cand.test_case = std::move(c);
        } catch (const std::exception& e) {
            cand.reject_reason = e.what();
        }
        result.push_back(std::move(cand));
    });
    return result;
}

Dataset promote_quarantine(const std::filesystem::path& quarantine_path,
                           const std::filesystem::path& dataset_path, const Registry& registry) {
    // single-writer promotion: hold an advisory lock on the dataset file
    const int fd = ::open(dataset_path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd < 0) throw IoError("cannot open dataset for promotion: " + dataset_path.string());
    if (::flock(fd, LOCK_EX) != 0) {
        ::close(fd);
        throw IoError("cannot lock dataset: " + dataset_path.string());
    }

    Dataset merged;
    try {
        const std::string existing = util::read_file(dataset_path);
        Dataset base = util::trim(existing).empty() ? Dataset{}
                                                    : parse_dataset(existing, registry,
                                                                    dataset_path.string());
        Dataset incoming = load_dataset(quarantine_path, registry);

        std::set<std::string> ids;
        for (const auto& c : base.cases) ids.insert(c.id);
        merged = std::move(base);
        for (auto& c : incoming.cases) {
            if (!ids.insert(c.id).second) {
                throw IntegrityError("promotion: quarantined case id '" + c.id +
                                     "' already exists in dataset");
            }
            merged.cases.push_back(std::move(c));
        }
        merged.source_path = dataset_path.string();
        merged.manifest_digest = manifest_digest(merged.cases);
        save_dataset(merged, dataset_path);
    } catch (...) {
        ::flock(fd, LOCK_UN);
        ::close(fd);
        throw;
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    return merged;
}

}  // namespace fairaudit::dataset
