#include "nashcot/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace nashcot {

void CompletionRequest::validate() const {
    if (messages.empty()) throw std::invalid_argument("completion request: no messages");
    if (!std::isfinite(temperature) || temperature < 0.0)
        throw std::invalid_argument("completion request: temperature must be finite and >= 0");
    if (max_tokens < 1) throw std::invalid_argument("completion request: max_tokens must be >= 1");
}

namespace {

std::int64_t message_chars(const std::vector<ChatMessage>& messages) {
    std::int64_t total = 0;
    for (const auto& m : messages) total += static_cast<std::int64_t>(m.text.size());
    return total;
}

}  // namespace

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_queue(std::vector<std::string> responses,
                                                             double fixed_latency_ms) {
    auto backend = std::unique_ptr<ScriptedBackend>(new ScriptedBackend());
    backend->queue_.assign(responses.begin(), responses.end());
    backend->fixed_latency_ms_ = fixed_latency_ms;
    return backend;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_generator(Generator generator,
                                                                 double fixed_latency_ms) {
    if (!generator) throw std::invalid_argument("scripted backend: null generator");
    auto backend = std::unique_ptr<ScriptedBackend>(new ScriptedBackend());
    backend->generator_ = std::move(generator);
    backend->fixed_latency_ms_ = fixed_latency_ms;
    return backend;
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    request.validate();
    std::string text;
    if (generator_) {
        text = generator_(request);
        if (fixed_latency_ms_ > 0.0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(fixed_latency_ms_));
        }
    } else {
        // the guard spans the whole call so overlapping callers are caught
        // even while one sits in the latency sleep
        if (in_flight_.fetch_add(1) != 0) {
            in_flight_.fetch_sub(1);
            throw std::logic_error("scripted backend: positional script rejects concurrent calls");
        }
        struct FlightGuard {
            std::atomic<int>& counter;
            ~FlightGuard() { counter.fetch_sub(1); }
        } guard{in_flight_};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (queue_.empty()) {
                throw BackendError(BackendError::Kind::ScriptExhausted,
                                   "scripted backend: script exhausted");
            }
            text = std::move(queue_.front());
            queue_.pop_front();
        }
        if (fixed_latency_ms_ > 0.0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(fixed_latency_ms_));
        }
    }
    calls_.fetch_add(1);
    CompletionResponse response;
    response.text = std::move(text);
    response.prompt_tokens = message_chars(request.messages);
    response.completion_tokens = static_cast<std::int64_t>(response.text.size());
    response.latency_ms = fixed_latency_ms_;
    return response;
}

CapabilityReport ScriptedBackend::probe() {
    return {true, model_id(), true};
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return queue_.size();
}

std::string api_key_from_env() {
    if (const char* key = std::getenv("NASHCOT_API_KEY")) return key;
    if (const char* key = std::getenv("OPENAI_API_KEY")) return key;
    return {};
}

}  // namespace nashcot
