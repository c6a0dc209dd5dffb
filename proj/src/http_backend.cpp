#include <chrono>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nashcot/backend.hpp"

namespace nashcot {

using nlohmann::json;

namespace {

bool retryable_status(int status) { return status >= 500 || status == 429; }

}  // namespace

struct HttpBackend::Impl {
    explicit Impl(const HttpBackendConfig& config)
        : client(config.base_url), slots(config.max_concurrency) {
        client.set_connection_timeout(config.timeout_seconds, 0);
        client.set_read_timeout(config.timeout_seconds, 0);
        client.set_write_timeout(config.timeout_seconds, 0);
    }

    httplib::Client client;
    std::counting_semaphore<256> slots;
};

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw std::invalid_argument("http backend: base url required");
    if (config_.model.empty()) throw std::invalid_argument("http backend: model id required");
    if (config_.max_concurrency < 1 || config_.max_concurrency > 256)
        throw std::invalid_argument("http backend: max_concurrency must be in 1..256");
    impl_ = std::make_unique<Impl>(config_);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
    }
    json body{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.seed_hint) body["seed"] = *request.seed_hint;
    return body.dump();
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    CompletionRequest effective = request;
    if (effective.model.empty()) effective.model = config_.model;
    effective.validate();
    const std::string body = request_body(effective);

    impl_->slots.acquire();
    struct SlotGuard {
        std::counting_semaphore<256>& slots;
        ~SlotGuard() { slots.release(); }
    } guard{impl_->slots};

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto start = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay_ms = config_.backoff_initial_ms * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
        }
        auto result = impl_->client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!result) {
            last_error = "network error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 401 || result->status == 403) {
            throw BackendError(BackendError::Kind::Auth,
                               "http backend: authentication rejected (HTTP " +
                                   std::to_string(result->status) + ")");
        }
        if (retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            throw BackendError(BackendError::Kind::Protocol,
                               "http backend: unexpected HTTP " + std::to_string(result->status) +
                                   ": " + result->body.substr(0, 200));
        }
        try {
            json payload = json::parse(result->body);
            CompletionResponse response;
            response.text = payload.at("choices").at(0).at("message").at("content").get<std::string>();
            if (payload.contains("usage") && payload["usage"].is_object()) {
                response.prompt_tokens = payload["usage"].value("prompt_tokens", 0);
                response.completion_tokens = payload["usage"].value("completion_tokens", 0);
            }
            response.latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
            calls_.fetch_add(1);
            return response;
        } catch (const json::exception& ex) {
            throw BackendError(BackendError::Kind::Protocol,
                               std::string("http backend: malformed response body: ") + ex.what());
        }
    }
    throw BackendError(BackendError::Kind::Transport,
                       "http backend: " + last_error + " after " +
                           std::to_string(config_.max_retries + 1) + " attempts");
}

CapabilityReport HttpBackend::probe() {
    CompletionRequest ping;
    ping.model = config_.model;
    ping.messages = {{Role::User, "ping"}};
    ping.temperature = 0.0;
    ping.max_tokens = 1;
    const std::string body = request_body(ping);

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto result = impl_->client.Post("/v1/chat/completions", headers, body, "application/json");
    if (!result) {
        throw BackendError(BackendError::Kind::Transport,
                           "http backend: probe failed: " + httplib::to_string(result.error()));
    }
    CapabilityReport report;
    report.reachable = result->status >= 200 && result->status < 300;
    if (report.reachable) {
        try {
            json payload = json::parse(result->body);
            report.model = payload.value("model", config_.model);
            report.usage_reported = payload.contains("usage");
        } catch (const json::exception&) {
            report.model = config_.model;
        }
    }
    return report;
}

}  // namespace nashcot
