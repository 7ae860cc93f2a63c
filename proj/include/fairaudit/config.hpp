#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/analysis.hpp"
#include "fairaudit/domain.hpp"
#include "fairaudit/gateway.hpp"

namespace fairaudit::config {

struct ProviderConfig {
    std::string id;
    std::string type;         // "mock" or "openai"
    std::string base_url;     // openai
    std::string api_key_env;  // openai: name of the env var holding the key
    int timeout_sec = 60;
    nlohmann::json script;     // mock: inline rule array
    std::string script_path;   // mock: rule array file (relative to config)
    std::string call_log;      // mock: optional per-call log file
};

struct SampleConfig {
    double fraction = 1.0;
    std::uint64_t seed = 0;
};

/// Parsed and validated audit configuration (single JSON file; flags override).
struct AuditConfig {
    std::map<std::string, ProviderConfig> providers;
    std::map<std::string, gateway::ModelProfile> models;

    std::vector<std::string> candidates;  // model names audited by run/evaluate
    std::string evaluator_model;
    PromptMethod evaluator_method = PromptMethod::ZeroShotExplainable;
    double evaluator_temperature = 0.0;
    std::string generator_model;

    analysis::ThresholdPolicy thresholds;
    gateway::RetryPolicy retry;
    int max_in_flight = 4;

    std::filesystem::path dataset_path;
    std::filesystem::path registry_path;  // empty = bundled registry
    std::filesystem::path run_dir;
    std::filesystem::path report_dir;
    std::filesystem::path cache_dir;

    std::optional<SampleConfig> sample;

    std::filesystem::path config_path;
    std::string config_digest;  // sha256 of the canonicalized config document

    const gateway::ModelProfile& model(const std::string& name) const;
};

/// Parse + validate. Relative paths resolve against the config file's
/// directory. Throws ValidationError / IntegrityError on bad content.
AuditConfig load_config(const std::filesystem::path& path);
AuditConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& config_path);

/// Construct a gateway with every configured provider adapter and model
/// registered. Mock adapters are returned for tests that need call counts.
struct BuiltGateway {
    std::unique_ptr<gateway::Gateway> gw;
    std::map<std::string, std::shared_ptr<gateway::MockAdapter>> mocks;
};

BuiltGateway build_gateway(const AuditConfig& cfg);

}  // namespace fairaudit::config
