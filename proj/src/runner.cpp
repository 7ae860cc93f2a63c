#include "fairaudit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "fairaudit/util.hpp"

namespace fairaudit::runner {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RunStore
// ---------------------------------------------------------------------------

RunStore::RunStore(std::filesystem::path dir)
    : dir_(std::move(dir)), write_mu_(std::make_unique<std::mutex>()) {
    std::filesystem::create_directories(dir_);
}

bool RunStore::exists() const { return std::filesystem::exists(transcripts_path()); }

std::vector<Transcript> RunStore::load_transcripts() const {
    std::vector<Transcript> out;
    if (!std::filesystem::exists(transcripts_path())) return out;
    const std::string content = util::read_file(transcripts_path());
    util::for_each_line(content, [&](std::size_t line_no, std::string_view line) {
        try {
            out.push_back(json::parse(line).get<Transcript>());
        } catch (const std::exception& e) {
            throw IntegrityError(std::string("transcripts: bad record: ") + e.what(), line_no);
        }
    });
    return out;
}

std::vector<CaseFailure> RunStore::load_failures() const {
    std::vector<CaseFailure> out;
    if (!std::filesystem::exists(failures_path())) return out;
    const std::string content = util::read_file(failures_path());
    util::for_each_line(content, [&](std::size_t, std::string_view line) {
        const json j = json::parse(line);
        CaseFailure f;
        f.run_id = j.value("run_id", "");
        f.case_id = j.at("case_id").get<std::string>();
        f.model = j.value("model", "");
        f.error_kind = j.at("error").value("kind", "");
        f.error_message = j.at("error").value("message", "");
        f.created_at = j.value("created_at", "");
        out.push_back(std::move(f));
    });
    return out;
}

void RunStore::append_transcript(const Transcript& t) {
    std::lock_guard lock(*write_mu_);
    util::append_line(transcripts_path(), json(t).dump());
}

void RunStore::append_failure(const CaseFailure& f) {
    std::lock_guard lock(*write_mu_);
    const json j{{"type", "failure"},
                 {"run_id", f.run_id},
                 {"case_id", f.case_id},
                 {"model", f.model},
                 {"error", {{"kind", f.error_kind}, {"message", f.error_message}}},
                 {"created_at", f.created_at}};
    util::append_line(failures_path(), j.dump());
}

std::string RunStore::store_digest(std::vector<Transcript> transcripts) {
    std::sort(transcripts.begin(), transcripts.end(),
              [](const Transcript& a, const Transcript& b) { return a.case_id < b.case_id; });
    std::string canonical;
    for (const auto& t : transcripts) {
        // semantic fields only; created_at / cache_hit / run_id are volatile
        const json j{{"case_id", t.case_id},
                     {"model", t.model},
                     {"responses", t.responses},
                     {"sampling", {{"temperature", t.sampling.temperature},
                                   {"max_tokens", t.sampling.max_tokens}}}};
        canonical += j.dump();
        canonical += '\n';
    }
    return util::sha256_hex(canonical);
}

void RunStore::compact(const std::string& run_id, const std::string& model,
                       const std::string& dataset_digest, const std::string& config_digest) {
    std::lock_guard lock(*write_mu_);
    std::vector<Transcript> transcripts;
    if (std::filesystem::exists(transcripts_path())) {
        const std::string content = util::read_file(transcripts_path());
        util::for_each_line(content, [&](std::size_t, std::string_view line) {
            transcripts.push_back(json::parse(line).get<Transcript>());
        });
    }
    std::sort(transcripts.begin(), transcripts.end(),
              [](const Transcript& a, const Transcript& b) { return a.case_id < b.case_id; });

    std::string body;
    for (const auto& t : transcripts) {
        body += json(t).dump();
        body += '\n';
    }
    util::write_file_atomic(transcripts_path(), body);

    const json meta{{"run_id", run_id},
                    {"model", model},
                    {"dataset_digest", dataset_digest},
                    {"config_digest", config_digest},
                    {"store_digest", store_digest(transcripts)},
                    {"transcripts", transcripts.size()},
                    {"updated_at", util::iso8601_now_utc()}};
    util::write_file_atomic(meta_path(), meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Case execution
// ---------------------------------------------------------------------------

namespace {

gateway::ChatRequest request_for(const gateway::ModelProfile& profile, const std::string& text) {
    gateway::ChatRequest req;
    req.model = profile.name;
    req.system_text = profile.system_text;  // none by default: bare questions
    req.user_text = text;
    req.temperature = profile.temperature;
    req.max_tokens = profile.max_tokens;
    return req;
}

}  // namespace

Transcript run_case(const TestCase& test_case, const gateway::ModelProfile& profile,
                    gateway::Gateway& gw, const std::string& run_id) {
    test_case.validate();

    // each leg runs in a fresh context; pairs go out strictly A then B
    std::vector<std::string> leg_texts;
    if (const auto* p = std::get_if<SingleQuestion>(&test_case.payload)) {
        leg_texts = {p->question};
    } else if (const auto* p = std::get_if<StoryPair>(&test_case.payload)) {
        leg_texts = {p->prompt_a, p->prompt_b};
    } else {
        const auto& q = std::get<QuestionPair>(test_case.payload);
        leg_texts = {q.question_a, q.question_b};
    }

    Transcript t;
    t.run_id = run_id;
    t.case_id = test_case.id;
    t.model = profile.name;
    t.sampling = {profile.temperature, profile.max_tokens};
    for (const auto& text : leg_texts) {
        try {
            auto [completion, hit] = gw.cached_complete(request_for(profile, text), run_id);
            t.responses.push_back(std::move(completion));
            t.cache_hit.push_back(hit);
        } catch (const GatewayError& e) {
            throw GatewayError(e.kind(),
                               "case '" + test_case.id + "': " + e.what(), e.attempts());
        }
    }
    t.created_at = util::iso8601_now_utc();
    t.validate_against(test_case.stage);
    return t;
}

RunSummary run_suite(const dataset::Dataset& data, const gateway::ModelProfile& profile,
                     gateway::Gateway& gw, const std::string& run_id, RunStore& store,
                     const RunOptions& options, const std::string& config_digest) {
    RunSummary summary;

    std::set<std::string> done;
    if (options.resume) {
        for (const auto& t : store.load_transcripts()) done.insert(t.case_id);
    } else if (store.exists()) {
        // a fresh run over an existing store starts from scratch
        std::filesystem::remove(store.transcripts_path());
        std::filesystem::remove(store.failures_path());
    }
    if (std::filesystem::exists(store.failures_path())) {
        std::filesystem::remove(store.failures_path());  // failed cases re-run
    }

    std::vector<const TestCase*> pending;
    for (const auto& c : data.cases) {
        if (done.count(c.id) != 0) {
            ++summary.skipped;
        } else {
            pending.push_back(&c);
        }
    }
    if (options.max_cases > 0 && pending.size() > options.max_cases) {
        summary.remaining = pending.size() - options.max_cases;
        pending.resize(options.max_cases);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> ok{0};
    std::atomic<std::size_t> failed{0};

    const int workers = std::max(1, std::min<int>(options.workers,
                                                  static_cast<int>(pending.size() ? pending.size() : 1)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= pending.size()) return;
                const TestCase& c = *pending[i];
                try {
                    const Transcript t = run_case(c, profile, gw, run_id);
                    store.append_transcript(t);  // only after every leg succeeded
                    ++ok;
                } catch (const std::exception& e) {
                    CaseFailure f;
                    f.run_id = run_id;
                    f.case_id = c.id;
                    f.model = profile.name;
                    f.error_kind = "error";
                    if (const auto* ge = dynamic_cast<const GatewayError*>(&e)) {
                        switch (ge->kind()) {
                            case GatewayErrorKind::Auth: f.error_kind = "auth"; break;
                            case GatewayErrorKind::RateLimited: f.error_kind = "rate_limited"; break;
                            case GatewayErrorKind::Timeout: f.error_kind = "timeout"; break;
                            case GatewayErrorKind::MalformedResponse:
                                f.error_kind = "malformed_response";
                                break;
                            case GatewayErrorKind::Config: f.error_kind = "config"; break;
                        }
                    }
                    f.error_message = e.what();
                    f.created_at = util::iso8601_now_utc();
                    store.append_failure(f);
                    ++failed;
                }
            }
        });
    }
    for (auto& th : pool) th.join();

    summary.ok = ok.load();
    summary.failed = failed.load();
    store.compact(run_id, profile.name, data.manifest_digest, config_digest);
    summary.store_digest = RunStore::store_digest(store.load_transcripts());
    return summary;
}

}  // namespace fairaudit::runner
