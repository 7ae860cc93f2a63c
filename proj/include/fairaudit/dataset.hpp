#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/domain.hpp"

namespace fairaudit::dataset {

/// Sampling provenance carried in a dataset's "meta" header line.
struct Provenance {
    std::optional<std::uint64_t> seed;
    std::optional<double> fraction;
    std::optional<std::string> parent_digest;

    bool empty() const { return !seed && !fraction && !parent_digest; }
    bool operator==(const Provenance&) const = default;
};

/// A validated, ordered collection of test cases.
struct Dataset {
    std::vector<TestCase> cases;
    std::string source_path;
    std::string manifest_digest;  // sha256 over canonicalized case records
    Provenance provenance;

    std::size_t size() const { return cases.size(); }
    const TestCase* find(const std::string& case_id) const;
};

/// Inputs for one dataset-generation prompt.
struct GenerationSpec {
    std::string purpose;
    std::string methodology;
    std::string scenario;  // display name
    std::string factor;    // display name

    void validate() const;  // all four fields non-empty
};

/// Render the generation-prompt template with the four fields substituted.
/// Pure: identical specs yield byte-identical output.
std::string build_generation_prompt(const GenerationSpec& spec);

/// Format instruction appended when querying a generator model: asks for
/// `count` cases as line-delimited records in this stage's schema.
std::string generation_format_instruction(Stage stage, int count,
                                          const std::string& factor_id,
                                          const std::string& scenario_id);

/// Digest over the canonicalized case records (sorted-key JSON, one per line).
std::string manifest_digest(const std::vector<TestCase>& cases);

/// Parse and validate a line-delimited dataset. Errors carry 1-based line
/// numbers; duplicate ids, stage/payload mismatches, and factor/scenario ids
/// missing from `registry` are all rejected.
Dataset parse_dataset(const std::string& content, const Registry& registry,
                      const std::string& source_path = {});

Dataset load_dataset(const std::filesystem::path& path, const Registry& registry);

/// Serialize; includes a meta header line when provenance is present.
std::string serialize_dataset(const Dataset& d);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Per (factor id, stage) case counts. Every registry factor appears for all
/// four stages, absent combinations as zero.
std::map<std::pair<std::string, Stage>, std::size_t> dataset_stats(const Dataset& d,
                                                                   const Registry& registry);

/// Deterministic sample of floor(fraction * |cases|) cases, drawn without
/// replacement, original relative order preserved. Same (dataset, fraction,
/// seed) always selects the same subset.
Dataset sample_dataset(const Dataset& d, double fraction, std::uint64_t seed);

/// One generator-output line -> candidate case, or a reason it was rejected.
struct ParsedCandidate {
    std::optional<TestCase> test_case;
    std::string raw_line;
    std::string reject_reason;
};

/// Parse generator-model output into candidate cases. Lines that fail the
/// schema are returned as rejects, never an abort.
std::vector<ParsedCandidate> parse_generated_cases(const std::string& output,
                                                   const Registry& registry);

/// Append quarantined cases into a dataset file under an advisory lock,
/// re-validating the merged result. Returns the merged dataset.
Dataset promote_quarantine(const std::filesystem::path& quarantine_path,
                           const std::filesystem::path& dataset_path,
                           const Registry& registry);

}  // namespace fairaudit::dataset
