#include "fairaudit/gateway.hpp"

#include <chrono>
#include <iostream>
#include <random>
#include <regex>
#include <thread>

#include "fairaudit/util.hpp"

namespace fairaudit::gateway {

using nlohmann::json;

void ChatRequest::validate() const {
    if (util::trim(user_text).empty()) {
        throw ValidationError("user_text", "chat request with empty user_text");
    }
    if (temperature < 0 || temperature > 2) {
        throw ValidationError("temperature", "temperature must lie in [0, 2]");
    }
    if (max_tokens <= 0) {
        throw ValidationError("max_tokens", "max_tokens must be positive");
    }
}

std::string cache_key(const std::string& provider_id, const ChatRequest& req,
                      const std::string& run_id) {
    json j{{"provider", provider_id},
           {"model", req.model},
           {"system_text", req.system_text ? json(*req.system_text) : json()},
           {"user_text", req.user_text},
           {"temperature", req.temperature},
           {"max_tokens", req.max_tokens}};
    if (req.temperature > 0) j["run_id"] = run_id;  // resume scope only
    return util::sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

/// RAII slot in the bounded in-flight window.
class Gateway::InFlightGuard {
public:
    explicit InFlightGuard(Gateway& gw) : gw_(gw) {
        std::unique_lock lock(gw_.mu_);
        gw_.slot_available_.wait(lock, [&] { return gw_.in_flight_ < gw_.max_in_flight_; });
        ++gw_.in_flight_;
    }
    ~InFlightGuard() {
        {
            std::lock_guard lock(gw_.mu_);
            --gw_.in_flight_;
        }
        gw_.slot_available_.notify_one();
    }

private:
    Gateway& gw_;
};

Gateway::Gateway(RetryPolicy retry, int max_in_flight, std::filesystem::path cache_dir)
    : retry_(retry), max_in_flight_(max_in_flight > 0 ? max_in_flight : 1),
      cache_dir_(std::move(cache_dir)) {}

void Gateway::add_adapter(std::shared_ptr<ProviderAdapter> adapter) {
    adapters_[adapter->provider_id()] = std::move(adapter);
}

void Gateway::add_model(const ModelProfile& profile) {
    if (adapters_.count(profile.provider) == 0) {
        throw GatewayError(GatewayErrorKind::Config,
                           "model '" + profile.name + "' references unknown provider '" +
                               profile.provider + "'");
    }
    models_[profile.name] = profile;
}

const ModelProfile& Gateway::profile(const std::string& model) const {
    const auto it = models_.find(model);
    if (it == models_.end()) {
        throw GatewayError(GatewayErrorKind::Config, "unknown model '" + model + "'");
    }
    return it->second;
}

bool Gateway::has_model(const std::string& model) const { return models_.count(model) != 0; }

ProviderAdapter& Gateway::adapter_for(const std::string& model) const {
    return *adapters_.at(profile(model).provider);
}

namespace {

int backoff_delay_ms(const RetryPolicy& policy, int attempt) {
    double delay = policy.base_delay_ms;
    for (int i = 1; i < attempt; ++i) delay *= policy.factor;
    if (policy.jitter > 0) {
        thread_local std::mt19937 rng{std::random_device{}()};
        std::uniform_real_distribution<double> dist(1.0 - policy.jitter, 1.0 + policy.jitter);
        delay *= dist(rng);
    }
    return static_cast<int>(delay);
}

}  // namespace

std::string Gateway::complete(const ChatRequest& req) {
    req.validate();
    const ModelProfile& prof = profile(req.model);  // config errors precede any network activity
    ProviderAdapter& adapter = *adapters_.at(prof.provider);

    {
        std::lock_guard lock(telemetry_mu_);
        ++telemetry_.requests;
        ++telemetry_.upstream_calls;
    }

    for (int attempt = 1;; ++attempt) {
        {
            std::lock_guard lock(telemetry_mu_);
            ++telemetry_.upstream_attempts;
        }
        try {
            InFlightGuard guard(*this);
            return adapter.send(req, prof.model_string);
        } catch (const GatewayError& e) {
            if (!e.retryable() || attempt >= retry_.max_attempts) {
                throw GatewayError(e.kind(), e.what(), attempt);
            }
            {
                std::lock_guard lock(telemetry_mu_);
                ++telemetry_.retries;
            }
            const int delay = backoff_delay_ms(retry_, attempt);
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

std::optional<std::string> Gateway::cache_read(const std::string& key) {
    if (cache_dir_.empty()) return std::nullopt;
    const auto path = cache_dir_ / (key + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        const json entry = json::parse(util::read_file(path));
        return entry.at("completion").get<std::string>();
    } catch (const std::exception& e) {
        std::cerr << "warning: unreadable cache entry " << path << ": " << e.what() << "\n";
        return std::nullopt;
    }
}

void Gateway::cache_write(const std::string& key, const ChatRequest& req,
                          const std::string& text) {
    if (cache_dir_.empty()) return;
    try {
        // the originating request rides along for audit
        json entry{{"key", key},
                   {"request",
                    {{"model", req.model},
                     {"system_text", req.system_text ? json(*req.system_text) : json()},
                     {"user_text", req.user_text},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens}}},
                   {"completion", text},
                   {"created_at", util::iso8601_now_utc()}};
        util::write_file_atomic(cache_dir_ / (key + ".json"), entry.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "warning: cache write failed: " << e.what() << "\n";
    }
}

std::pair<std::string, bool> Gateway::cached_complete(const ChatRequest& req,
                                                      const std::string& run_id) {
    req.validate();
    const ModelProfile& prof = profile(req.model);
    const std::string key = cache_key(prof.provider, req, run_id);

    if (auto hit = cache_read(key)) {
        std::lock_guard lock(telemetry_mu_);
        ++telemetry_.requests;
        ++telemetry_.cache_hits;
        return {std::move(*hit), true};
    }
    std::string text = complete(req);
    cache_write(key, req, text);
    return {std::move(text), false};
}

Telemetry Gateway::telemetry() const {
    std::lock_guard lock(telemetry_mu_);
    return telemetry_;
}

// ---------------------------------------------------------------------------
// MockAdapter
// ---------------------------------------------------------------------------

MockAdapter::MockAdapter(std::string provider_id, std::vector<MockRule> script,
                         std::filesystem::path call_log)
    : provider_id_(std::move(provider_id)), call_log_(std::move(call_log)) {
    for (auto& rule : script) add_rule(std::move(rule));
}

void MockAdapter::add_rule(MockRule rule) {
    std::lock_guard lock(mu_);
    compiled_.emplace_back(rule.kind == MatchKind::Regex
                               ? std::optional<std::regex>(std::regex(rule.pattern))
                               : std::nullopt);
    remaining_failures_.push_back(rule.fail_times);
    script_.push_back(std::move(rule));
}

std::string MockAdapter::send(const ChatRequest& req, const std::string&) {
    struct FlightTracker {
        explicit FlightTracker(MockAdapter& m) : m_(m) {
            const int now = ++m_.in_flight_;
            int prev = m_.max_in_flight_.load();
            while (now > prev && !m_.max_in_flight_.compare_exchange_weak(prev, now)) {
            }
        }
        ~FlightTracker() { --m_.in_flight_; }
        MockAdapter& m_;
    } tracker(*this);

    ++calls_;
    if (!call_log_.empty()) {
        util::append_line(call_log_, util::sha256_hex(req.user_text));
    }

    // small stagger so concurrency tests actually overlap
    std::this_thread::sleep_for(std::chrono::microseconds(200));

    std::lock_guard lock(mu_);
    requests_.push_back(req.user_text);
    for (std::size_t i = 0; i < script_.size(); ++i) {
        const MockRule& rule = script_[i];
        bool matched = false;
        switch (rule.kind) {
            case MatchKind::Exact: matched = req.user_text == rule.pattern; break;
            case MatchKind::Substring:
                matched = req.user_text.find(rule.pattern) != std::string::npos;
                break;
            case MatchKind::Regex:
                matched = std::regex_search(req.user_text, *compiled_[i]);
                break;
        }
        if (!matched) continue;
        if (remaining_failures_[i] > 0) {
            --remaining_failures_[i];
            switch (rule.fail_kind) {
                case GatewayErrorKind::RateLimited:
                    throw GatewayError(GatewayErrorKind::RateLimited, "mock: scripted rate limit");
                case GatewayErrorKind::Timeout:
                    throw GatewayError(GatewayErrorKind::Timeout, "mock: scripted timeout");
                case GatewayErrorKind::Auth:
                    throw GatewayError(GatewayErrorKind::Auth, "mock: scripted auth failure");
                default:
                    throw GatewayError(GatewayErrorKind::MalformedResponse,
                                       "mock: scripted malformed response");
            }
        }
        return rule.response;
    }
    throw GatewayError(GatewayErrorKind::MalformedResponse,
                       "mock: no scripted rule matches request");
}

std::vector<std::string> MockAdapter::requests_seen() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::vector<MockRule> MockAdapter::parse_script(const json& script) {
    if (!script.is_array()) {
        throw ValidationError("script", "mock script must be an array of rules");
    }
    std::vector<MockRule> rules;
    for (const auto& item : script) {
        MockRule rule;
        const std::string kind = item.value("match", "substring");
        if (kind == "exact") {
            rule.kind = MatchKind::Exact;
        } else if (kind == "substring") {
            rule.kind = MatchKind::Substring;
        } else if (kind == "regex") {
            rule.kind = MatchKind::Regex;
        } else {
            throw ValidationError("match", "unknown mock matcher kind '" + kind + "'");
        }
        rule.pattern = item.at("pattern").get<std::string>();
        rule.response = item.value("response", "");
        rule.fail_times = item.value("fail_times", 0);
        const std::string fail_kind = item.value("fail_kind", "timeout");
        if (fail_kind == "timeout") {
            rule.fail_kind = GatewayErrorKind::Timeout;
        } else if (fail_kind == "rate_limited") {
            rule.fail_kind = GatewayErrorKind::RateLimited;
        } else if (fail_kind == "auth") {
            rule.fail_kind = GatewayErrorKind::Auth;
        } else if (fail_kind == "malformed") {
            rule.fail_kind = GatewayErrorKind::MalformedResponse;
        } else {
            throw ValidationError("fail_kind", "unknown mock failure kind '" + fail_kind + "'");
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

}  // namespace fairaudit::gateway
