#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit::gateway {

struct ChatRequest {
    std::string model;  // logical model name (config key)
    std::optional<std::string> system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_tokens = 1024;

    void validate() const;  // user_text non-empty, 0 <= temperature <= 2, max_tokens > 0
};

/// Provider contract. Adapters normalize every failure to GatewayError; no
/// provider-specific error type escapes this module.
class ProviderAdapter {
public:
    virtual ~ProviderAdapter() = default;
    virtual std::string provider_id() const = 0;
    /// `model_string` is the provider-side model identifier.
    virtual std::string send(const ChatRequest& req, const std::string& model_string) = 0;
};

struct RetryPolicy {
    int max_attempts = 5;
    int base_delay_ms = 1000;
    double factor = 2.0;
    double jitter = 0.2;  // +-20%
};

/// Resolved per-model configuration.
struct ModelProfile {
    std::string name;          // logical name
    std::string provider;      // provider id in config
    std::string model_string;  // provider-side identifier
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::string> system_text;
};

/// Cache key digest over (provider id, model, system_text, user_text,
/// temperature, max_tokens); run-scoped when temperature > 0.
std::string cache_key(const std::string& provider_id, const ChatRequest& req,
                      const std::string& run_id);

/// Cumulative counters; `upstream_attempts` includes retried attempts.
struct Telemetry {
    std::uint64_t requests = 0;
    std::uint64_t upstream_calls = 0;
    std::uint64_t upstream_attempts = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t retries = 0;
};

/// Provider-agnostic chat-completion access with retries, a bounded
/// in-flight cap, and a persistent content-addressed response cache.
class Gateway {
public:
    Gateway(RetryPolicy retry, int max_in_flight,
            std::filesystem::path cache_dir = {});

    /// Register an adapter and the logical models it serves.
    void add_adapter(std::shared_ptr<ProviderAdapter> adapter);
    void add_model(const ModelProfile& profile);

    const ModelProfile& profile(const std::string& model) const;
    bool has_model(const std::string& model) const;

    /// One completion with retry/backoff. Only RateLimited and Timeout are
    /// retried; attempt counts land in telemetry.
    std::string complete(const ChatRequest& req);

    /// Cache-backed completion. At temperature 0 the cache is shared across
    /// runs (one upstream call ever per distinct request); at temperature > 0
    /// entries are scoped to `run_id`. Cache I/O failures degrade to uncached
    /// operation with a warning on stderr.
    std::pair<std::string, bool> cached_complete(const ChatRequest& req,
                                                 const std::string& run_id);

    Telemetry telemetry() const;
    int max_in_flight() const { return max_in_flight_; }

private:
    class InFlightGuard;

    ProviderAdapter& adapter_for(const std::string& model) const;
    std::string complete_locked(const ChatRequest& req);
    std::optional<std::string> cache_read(const std::string& key);
    void cache_write(const std::string& key, const ChatRequest& req, const std::string& text);

    RetryPolicy retry_;
    int max_in_flight_;
    std::filesystem::path cache_dir_;

    std::map<std::string, std::shared_ptr<ProviderAdapter>> adapters_;
    std::map<std::string, ModelProfile> models_;

    mutable std::mutex mu_;
    std::condition_variable slot_available_;
    int in_flight_ = 0;

    mutable std::mutex telemetry_mu_;
    Telemetry telemetry_;
};

// ---------------------------------------------------------------------------
// Scriptable mock backend (offline testing)
// ---------------------------------------------------------------------------

enum class MatchKind { Exact, Substring, Regex };

/// One scripted rule: first matching rule in script order wins. A rule may
/// fail its first `fail_times` hits with `fail_kind` before succeeding.
struct MockRule {
    MatchKind kind = MatchKind::Substring;
    std::string pattern;
    std::string response;
    int fail_times = 0;
    GatewayErrorKind fail_kind = GatewayErrorKind::Timeout;
};

class MockAdapter : public ProviderAdapter {
public:
    explicit MockAdapter(std::string provider_id, std::vector<MockRule> script = {},
                         std::filesystem::path call_log = {});

    std::string provider_id() const override { return provider_id_; }
    std::string send(const ChatRequest& req, const std::string& model_string) override;

    void add_rule(MockRule rule);

    std::uint64_t call_count() const { return calls_.load(); }
    int max_in_flight_observed() const { return max_in_flight_.load(); }
    /// user_text of every request, in arrival order.
    std::vector<std::string> requests_seen() const;

    /// Parse the config-file script format (array of rule objects).
    static std::vector<MockRule> parse_script(const nlohmann::json& script);

private:
    std::string provider_id_;
    std::filesystem::path call_log_;

    mutable std::mutex mu_;
    std::vector<MockRule> script_;
    std::vector<std::optional<std::regex>> compiled_;  // pre-built regex per rule
    std::vector<int> remaining_failures_;
    std::vector<std::string> requests_;

    std::atomic<std::uint64_t> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

/// Chat-completions adapter for OpenAI-style HTTP endpoints. The provider
/// wire schema lives entirely inside this adapter.
class OpenAiAdapter : public ProviderAdapter {
public:
    OpenAiAdapter(std::string provider_id, std::string base_url, std::string api_key,
                  int timeout_sec = 60);

    std::string provider_id() const override { return provider_id_; }
    std::string send(const ChatRequest& req, const std::string& model_string) override;

private:
    std::string provider_id_;
    std::string base_url_;
    std::string api_key_;
    int timeout_sec_;
};

}  // namespace fairaudit::gateway
