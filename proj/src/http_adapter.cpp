#include <string>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "fairaudit/gateway.hpp"

namespace fairaudit::gateway {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string host_and_scheme;  // "http://127.0.0.1:8080"
    std::string path_prefix;      // "/v1" (no trailing slash)
};

SplitUrl split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayError(GatewayErrorKind::Config, "provider base_url missing scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.host_and_scheme = base_url;
    } else {
        out.host_and_scheme = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
            out.path_prefix.pop_back();
        }
    }
    return out;
}

}  // namespace

OpenAiAdapter::OpenAiAdapter(std::string provider_id, std::string base_url, std::string api_key,
                             int timeout_sec)
    : provider_id_(std::move(provider_id)), base_url_(std::move(base_url)),
      api_key_(std::move(api_key)), timeout_sec_(timeout_sec) {}

std::string OpenAiAdapter::send(const ChatRequest& req, const std::string& model_string) {
    const SplitUrl url = split_base_url(base_url_);

    httplib::Client client(url.host_and_scheme);
    client.set_connection_timeout(timeout_sec_, 0);
    client.set_read_timeout(timeout_sec_, 0);
    client.set_write_timeout(timeout_sec_, 0);

    json messages = json::array();
    if (req.system_text && !req.system_text->empty()) {
        messages.push_back({{"role", "system"}, {"content", *req.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_text}});

    const json body{{"model", model_string},
                    {"messages", std::move(messages)},
                    {"temperature", req.temperature},
                    {"max_tokens", req.max_tokens}};

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(url.path_prefix + "/chat/completions", headers, body.dump(),
                                 "application/json");
    if (!res) {
        throw GatewayError(GatewayErrorKind::Timeout,
                           provider_id_ + ": transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw GatewayError(GatewayErrorKind::Auth,
                           provider_id_ + ": authentication rejected (HTTP " +
                               std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
        throw GatewayError(GatewayErrorKind::RateLimited, provider_id_ + ": rate limited");
    }
    if (res->status == 408 || res->status >= 500) {
        throw GatewayError(GatewayErrorKind::Timeout,
                           provider_id_ + ": transient upstream failure (HTTP " +
                               std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw GatewayError(GatewayErrorKind::MalformedResponse,
                           provider_id_ + ": unexpected HTTP " + std::to_string(res->status) +
                               ": " + res->body);
    }

    try {
        const json payload = json::parse(res->body);
        return payload.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw GatewayError(GatewayErrorKind::MalformedResponse,
                           provider_id_ + ": unparsable completion payload: " + e.what());
    }
}

}  // namespace fairaudit::gateway
