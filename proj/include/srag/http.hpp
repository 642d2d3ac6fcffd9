#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>

#include "httplib.h"
#include "srag/gateway.hpp"

namespace srag {

// Remote chat-completion provider speaking the OpenAI-style
// /v1/chat/completions wire format.

struct HttpProviderConfig {
    std::string endpoint;                      // e.g. "https://api.openai.com"
    std::string completion_path = "/v1/chat/completions";
    std::string model_id = "gpt-4o";
    std::string api_key_env = "SRAG_API_KEY";  // name of the env var holding the key
    int timeout_seconds = 120;
    int max_retries = 3;  // total attempts
    int backoff_initial_ms = 250;
};

inline HttpProviderConfig http_provider_config_from_json(const json& j) {
    HttpProviderConfig cfg;
    cfg.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("completion_path")) cfg.completion_path = j["completion_path"].get<std::string>();
    if (j.contains("model_id")) cfg.model_id = j["model_id"].get<std::string>();
    if (j.contains("api_key_env")) cfg.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("timeout_seconds")) cfg.timeout_seconds = j["timeout_seconds"].get<int>();
    if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<int>();
    if (j.contains("backoff_initial_ms")) cfg.backoff_initial_ms = j["backoff_initial_ms"].get<int>();
    return cfg;
}

struct HttpResult {
    bool transport_ok = false;  // false: connection-level failure (retryable)
    int status = 0;
    std::string body;
};

// Injectable so tests can fault-inject without sockets.
using HttpTransport = std::function<HttpResult(const HttpProviderConfig&, const std::string& body)>;

inline HttpResult default_http_transport(const HttpProviderConfig& cfg, const std::string& body) {
    httplib::Client client(cfg.endpoint);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = client.Post(cfg.completion_path, headers, body, "application/json");
    if (!res) return {false, 0, ""};
    return {true, res->status, res->body};
}

class HttpProvider : public ChatProvider {
public:
    explicit HttpProvider(HttpProviderConfig cfg, HttpTransport transport = nullptr)
        : cfg_(std::move(cfg)), transport_(transport ? std::move(transport) : default_http_transport) {}

    // Transient transport failures, 429 and 5xx are retried with exponential
    // backoff up to max_retries attempts; any other non-200 status means the
    // request itself is malformed and is never retried.
    std::string complete(const ChatRequest& request) override {
        json payload = {
            {"model", request.model_id.empty() ? cfg_.model_id : request.model_id},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens},
            {"messages",
             json::array({{{"role", "system"}, {"content", request.system_prompt}},
                          {{"role", "user"}, {"content", request.user_prompt}}})},
        };
        const std::string body = payload.dump();

        auto started = std::chrono::steady_clock::now();
        std::string last_failure;
        for (int attempt = 0; attempt < std::max(1, cfg_.max_retries); ++attempt) {
            if (attempt > 0) {
                int delay = cfg_.backoff_initial_ms * (1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
            HttpResult res = transport_(cfg_, body);
            if (!res.transport_ok) {
                last_failure = "transport failure";
                continue;
            }
            if (res.status == 429 || res.status >= 500) {
                last_failure = "status " + std::to_string(res.status);
                continue;
            }
            if (res.status != 200)
                throw Error(ErrorKind::Provider,
                            "request rejected with status " + std::to_string(res.status) + ": " +
                                res.body.substr(0, 200));
            std::string content = parse_content(res.body);
            double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            log_call(request, content, ms);
            return content;
        }
        throw Error(ErrorKind::Provider,
                    "exhausted " + std::to_string(cfg_.max_retries) + " attempts (" + last_failure + ")");
    }

    std::string name() const override { return "http:" + cfg_.endpoint; }

private:
    static std::string parse_content(const std::string& body) {
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
            throw Error(ErrorKind::Provider, "malformed completion response: " + body.substr(0, 200));
        return j["choices"][0].at("message").at("content").get<std::string>();
    }

    HttpProviderConfig cfg_;
    HttpTransport transport_;
};

}  // namespace srag
