#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nashcot/templates.hpp"

namespace nashcot {

// ============================================================================
// Chat-completion access
// ============================================================================

struct CompletionRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
    std::optional<std::uint64_t> seed_hint;

    void validate() const;  // non-empty messages, finite temperature >= 0
};

struct CompletionResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;      // 0 when the backend cannot report
    std::int64_t completion_tokens = 0;  // 0 when the backend cannot report
    double latency_ms = 0.0;
};

struct CapabilityReport {
    bool reachable = false;
    std::string model;
    bool usage_reported = false;
};

struct BackendError : std::runtime_error {
    enum class Kind { Transport, Protocol, Auth, ScriptExhausted };
    Kind kind;
    BackendError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

class Backend {
public:
    virtual ~Backend() = default;

    /// Returns the full completion. Throws BackendError on failure.
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;

    /// Reachability / capability check. Throws BackendError::Transport when
    /// the backend cannot be reached at all.
    virtual CapabilityReport probe() = 0;

    /// Default model id requests should carry.
    virtual std::string model_id() const = 0;

    /// Completions served so far (the backend-side call ledger).
    virtual std::int64_t calls_served() const = 0;
};

// ============================================================================
// Scripted backend
// ============================================================================

/// Deterministic backend for tests and replays. Two modes:
///   - positional: consumes a fixed response queue in order; concurrent
///     callers are a contract violation and are rejected, exhaustion raises
///     BackendError::ScriptExhausted.
///   - generator: synthesizes the response as a pure function of the request;
///     safe for unrestricted concurrent use.
/// A configured fixed latency is really slept and reported verbatim in the
/// response, so wall-clock measurements and serialized ledgers stay
/// consistent across runs.
class ScriptedBackend : public Backend {
public:
    using Generator = std::function<std::string(const CompletionRequest&)>;

    static std::unique_ptr<ScriptedBackend> from_queue(std::vector<std::string> responses,
                                                       double fixed_latency_ms = 0.0);
    static std::unique_ptr<ScriptedBackend> from_generator(Generator generator,
                                                           double fixed_latency_ms = 0.0);

    CompletionResponse complete(const CompletionRequest& request) override;
    CapabilityReport probe() override;
    std::string model_id() const override { return "scripted"; }
    std::int64_t calls_served() const override { return calls_; }

    std::size_t remaining() const;

private:
    ScriptedBackend() = default;

    std::deque<std::string> queue_;
    Generator generator_;
    double fixed_latency_ms_ = 0.0;
    mutable std::mutex mutex_;
    std::atomic<int> in_flight_{0};
    std::atomic<std::int64_t> calls_{0};
};

// ============================================================================
// OpenAI-compatible HTTP backend
// ============================================================================

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://localhost:8000"
    std::string model;
    std::string api_key;  // filled from the environment, never from flags
    int max_retries = 3;
    double backoff_initial_ms = 1000.0;  // doubled per retry: 1s, 2s, 4s
    int max_concurrency = 4;
    int timeout_seconds = 120;
};

/// Reads the credential for live backends: NASHCOT_API_KEY, falling back to
/// OPENAI_API_KEY. Empty when neither is set.
std::string api_key_from_env();

/// Speaks POST <base-url>/v1/chat/completions with a JSON body
/// {model, messages, temperature, max_tokens} and reads
/// choices[0].message.content plus usage token counts. Transient transport
/// failures (network errors, HTTP >= 500, 429) retry with exponential
/// backoff up to the configured cap; 401/403 raise Auth immediately; other
/// failures raise Protocol.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    CompletionResponse complete(const CompletionRequest& request) override;
    CapabilityReport probe() override;
    std::string model_id() const override { return config_.model; }
    std::int64_t calls_served() const override { return calls_; }

    /// Request body serialization, exposed for wire-format tests.
    static std::string request_body(const CompletionRequest& request);

private:
    struct Impl;
    HttpBackendConfig config_;
    std::unique_ptr<Impl> impl_;
    std::atomic<std::int64_t> calls_{0};
};

}  // namespace nashcot
