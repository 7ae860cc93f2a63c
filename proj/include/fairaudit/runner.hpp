#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/domain.hpp"
#include "fairaudit/gateway.hpp"

namespace fairaudit::runner {

/// One failed case in the failures ledger. Mirrors the transcript record
/// with an `error` field so failed cases can be re-run selectively.
struct CaseFailure {
    std::string run_id;
    std::string case_id;
    std::string model;
    std::string error_kind;
    std::string error_message;
    std::string created_at;
};

/// On-disk store for one (run, model): `transcripts.jsonl`, `failures.jsonl`
/// and `run_meta.json` in a single directory. The compacted store is sorted
/// by case_id regardless of completion order.
class RunStore {
public:
    explicit RunStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path transcripts_path() const { return dir_ / "transcripts.jsonl"; }
    std::filesystem::path failures_path() const { return dir_ / "failures.jsonl"; }
    std::filesystem::path meta_path() const { return dir_ / "run_meta.json"; }
    std::filesystem::path evaluations_path() const { return dir_ / "evaluations.jsonl"; }
    std::filesystem::path unevaluated_path() const { return dir_ / "unevaluated.jsonl"; }

    bool exists() const;
    std::vector<Transcript> load_transcripts() const;
    std::vector<CaseFailure> load_failures() const;

    void append_transcript(const Transcript& t);  // serialized through one writer
    void append_failure(const CaseFailure& f);

    /// Sort by case_id, rewrite atomically, recompute the store digest and
    /// write run_meta. Idempotent.
    void compact(const std::string& run_id, const std::string& model,
                 const std::string& dataset_digest, const std::string& config_digest);

    /// Digest over canonicalized transcript records sorted by case_id.
    /// Volatile provenance (created_at, cache_hit, run_id) is excluded so
    /// interrupted-and-resumed runs digest identically to uninterrupted ones.
    static std::string store_digest(std::vector<Transcript> transcripts);

private:
    std::filesystem::path dir_;
    std::unique_ptr<std::mutex> write_mu_;
};

struct RunOptions {
    bool resume = false;
    int workers = 4;
    /// Test/ops hook: process at most this many pending cases, then stop as
    /// an interrupted run would (0 = no limit).
    std::size_t max_cases = 0;
};

struct RunSummary {
    std::size_t ok = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;    // already persisted (resume)
    std::size_t remaining = 0;  // stopped early via max_cases
    std::string store_digest;

    bool success() const { return failed == 0 && remaining == 0; }
};

/// Execute one case per its stage protocol: one completion for S1/S4, two
/// independent completions (A then B, fresh contexts) for S2/S3.
Transcript run_case(const TestCase& test_case, const gateway::ModelProfile& profile,
                    gateway::Gateway& gw, const std::string& run_id);

/// Run every case of `data` against `model`, persisting transcripts with
/// per-case atomicity. Per-case failures land in the failures ledger and do
/// not abort the suite. With resume=true, already persisted cases are skipped.
RunSummary run_suite(const dataset::Dataset& data, const gateway::ModelProfile& profile,
                     gateway::Gateway& gw, const std::string& run_id, RunStore& store,
                     const RunOptions& options, const std::string& config_digest = {});

}  // namespace fairaudit::runner
