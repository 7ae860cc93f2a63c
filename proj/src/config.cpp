#include "fairaudit/config.hpp"

#include <cstdlib>

#include "fairaudit/util.hpp"

namespace fairaudit::config {

using nlohmann::json;

const gateway::ModelProfile& AuditConfig::model(const std::string& name) const {
    const auto it = models.find(name);
    if (it == models.end()) {
        throw ValidationError("model", "config does not define model '" + name + "'");
    }
    return it->second;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::set<int> parse_passing(const json& arr, const std::string& stage) {
    if (!arr.is_array()) {
        throw ValidationError("thresholds", "threshold entry for " + stage + " must be an array");
    }
    std::set<int> out;
    for (const auto& v : arr) out.insert(v.get<int>());
    return out;
}

}  // namespace

AuditConfig parse_config(const json& doc, const std::filesystem::path& config_path) {
    AuditConfig cfg;
    cfg.config_path = config_path;
    cfg.config_digest = util::sha256_hex(doc.dump());
    const auto base = config_path.has_parent_path() ? config_path.parent_path()
                                                    : std::filesystem::path(".");

    const json providers = doc.value("providers", json::object());
    for (const auto& [id, p] : providers.items()) {
        ProviderConfig pc;
        pc.id = id;
        pc.type = p.value("type", "openai");
        if (pc.type != "mock" && pc.type != "openai") {
            throw ValidationError("providers", "provider '" + id + "': unknown type '" + pc.type +
                                                   "'");
        }
        pc.base_url = p.value("base_url", "");
        pc.api_key_env = p.value("api_key_env", "");
        pc.timeout_sec = p.value("timeout_sec", 60);
        if (p.contains("script")) pc.script = p.at("script");
        pc.script_path = p.value("script_path", "");
        pc.call_log = p.value("call_log", "");
        if (pc.type == "openai" && pc.base_url.empty()) {
            throw ValidationError("providers", "provider '" + id + "': base_url is required");
        }
        cfg.providers[id] = std::move(pc);
    }

    const json models = doc.value("models", json::object());
    for (const auto& [name, m] : models.items()) {
        gateway::ModelProfile prof;
        prof.name = name;
        prof.provider = m.value("provider", "");
        prof.model_string = m.value("model", name);
        prof.temperature = m.value("temperature", 0.0);
        prof.max_tokens = m.value("max_tokens", 1024);
        if (m.contains("system_text")) prof.system_text = m.at("system_text").get<std::string>();
        if (cfg.providers.count(prof.provider) == 0) {
            throw ValidationError("models", "model '" + name + "' references unconfigured provider '" +
                                                prof.provider + "'");
        }
        if (prof.temperature < 0 || prof.temperature > 2) {
            throw ValidationError("models", "model '" + name + "': temperature outside [0, 2]");
        }
        cfg.models[name] = std::move(prof);
    }

    cfg.candidates = doc.value("candidates", std::vector<std::string>{});
    for (const auto& c : cfg.candidates) cfg.model(c);

    if (doc.contains("evaluator")) {
        const json& ev = doc.at("evaluator");
        cfg.evaluator_model = ev.value("model", "");
        if (!cfg.evaluator_model.empty()) cfg.model(cfg.evaluator_model);
        cfg.evaluator_method = parse_prompt_method(ev.value("method", "zero-shot"));
        cfg.evaluator_temperature = ev.value("temperature", 0.0);
        if (cfg.evaluator_temperature < 0) {
            throw ValidationError("evaluator", "evaluator temperature must be >= 0");
        }
    }
    const json generator = doc.value("generator", json::object());
    cfg.generator_model = generator.value("model", "");
    if (!cfg.generator_model.empty()) cfg.model(cfg.generator_model);

    if (doc.contains("thresholds")) {
        for (const auto& [stage_name, arr] : doc.at("thresholds").items()) {
            cfg.thresholds.set_passing(parse_stage(stage_name), parse_passing(arr, stage_name));
        }
    }

    if (doc.contains("retry")) {
        const json& r = doc.at("retry");
        cfg.retry.max_attempts = r.value("max_attempts", 5);
        cfg.retry.base_delay_ms = r.value("base_delay_ms", 1000);
        cfg.retry.factor = r.value("factor", 2.0);
        cfg.retry.jitter = r.value("jitter", 0.2);
        if (cfg.retry.max_attempts < 1) {
            throw ValidationError("retry", "max_attempts must be >= 1");
        }
    }
    const json concurrency = doc.value("concurrency", json::object());
    cfg.max_in_flight = concurrency.value("max_in_flight", 4);
    if (cfg.max_in_flight < 1) {
        throw ValidationError("concurrency", "max_in_flight must be >= 1");
    }

    const json paths = doc.value("paths", json::object());
    cfg.dataset_path = resolve(base, paths.value("dataset", ""));
    cfg.registry_path = resolve(base, paths.value("registry", ""));
    cfg.run_dir = resolve(base, paths.value("run_dir", "runs"));
    cfg.report_dir = resolve(base, paths.value("report_dir", "reports"));
    cfg.cache_dir = resolve(base, paths.value("cache_dir", "cache"));

    if (doc.contains("sample")) {
        SampleConfig s;
        s.fraction = doc.at("sample").value("fraction", 1.0);
        s.seed = doc.at("sample").value("seed", 0);
        if (!(s.fraction > 0.0) || s.fraction > 1.0) {
            throw ValidationError("sample", "sample fraction must lie in (0, 1]");
        }
        cfg.sample = s;
    }
    return cfg;
}

AuditConfig load_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("config", "config " + path.string() + " is not valid JSON: " +
                                            e.what());
    }
    return parse_config(doc, path);
}

BuiltGateway build_gateway(const AuditConfig& cfg) {
    BuiltGateway built;
    built.gw = std::make_unique<gateway::Gateway>(cfg.retry, cfg.max_in_flight, cfg.cache_dir);

    const auto base = cfg.config_path.has_parent_path() ? cfg.config_path.parent_path()
                                                        : std::filesystem::path(".");
    for (const auto& [id, pc] : cfg.providers) {
        if (pc.type == "mock") {
            json script = pc.script;
            if (!pc.script_path.empty()) {
                script = json::parse(util::read_file(resolve(base, pc.script_path)));
            }
            auto rules = script.is_null() ? std::vector<gateway::MockRule>{}
                                          : gateway::MockAdapter::parse_script(script);
            auto mock = std::make_shared<gateway::MockAdapter>(
                id, std::move(rules),
                pc.call_log.empty() ? std::filesystem::path{} : resolve(base, pc.call_log));
            built.mocks[id] = mock;
            built.gw->add_adapter(mock);
        } else {
            std::string key;
            if (!pc.api_key_env.empty()) {
                if (const char* v = std::getenv(pc.api_key_env.c_str())) key = v;
            }
            built.gw->add_adapter(std::make_shared<gateway::OpenAiAdapter>(
                id, pc.base_url, key, pc.timeout_sec));
        }
    }
    for (const auto& [name, prof] : cfg.models) built.gw->add_model(prof);
    return built;
}

}  // namespace fairaudit::config
