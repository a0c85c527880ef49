#pragma once

#include "minions/domain.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace minions {

enum class MessageRole { user, assistant };

std::string_view to_string(MessageRole r);

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;
    /// Image file paths; encoded as data URLs on the wire.
    std::vector<std::string> images;
};

inline constexpr double kDefaultTemperature = 0.6;

struct CompletionRequest {
    /// Agent role label ("solver", "physics_verifier", ...). Used for trace
    /// records and role-keyed scripts; never sent to the provider.
    std::string agent;
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = kDefaultTemperature;
    /// nullopt means "model maximum": the field is omitted from the request.
    std::optional<int> max_tokens;

    /// Throws std::invalid_argument when messages are empty or the
    /// temperature is outside [0, 2].
    void validate() const;
};

struct CompletionResponse {
    std::string text;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    /// Set when the provider omitted usage and counts were estimated.
    bool tokens_estimated = false;
    std::int64_t latency_ms = 0;
};

/// Usage fallback: one token per four characters, rounded up.
std::int64_t estimate_tokens(std::string_view text);
std::int64_t estimate_prompt_tokens(const CompletionRequest& req);

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Endpoint unreachable after all retries.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int attempts)
        : BackendError(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

/// Non-2xx response; the body is preserved.
class ProviderError : public BackendError {
public:
    ProviderError(int status, std::string body);
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

/// A scripted backend ran out of responses.
class ScriptExhausted : public BackendError {
public:
    ScriptExhausted(std::int64_t call_number, const std::string& agent);
    std::int64_t call_number() const { return call_number_; }

private:
    std::int64_t call_number_;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

// ---------------------------------------------------------------------------

struct HttpBackendConfig {
    /// Full chat-completions URL, e.g. "http://localhost:8000/v1/chat/completions".
    std::string endpoint;
    std::string model;
    /// Name of the environment variable holding the API key (may be empty).
    std::string api_key_env;
    int retries = 2;
    std::chrono::seconds timeout{300};
    std::chrono::milliseconds backoff{500};
};

void to_json(json& j, const HttpBackendConfig& c);
void from_json(const json& j, HttpBackendConfig& c);

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);

    CompletionResponse complete(const CompletionRequest& req) override;

    /// The JSON body sent for `req` (images are read and base64-encoded).
    json build_body(const CompletionRequest& req) const;

    /// Attempts used by the most recent complete() call.
    int last_attempts() const { return last_attempts_.load(); }

    const HttpBackendConfig& config() const { return cfg_; }

private:
    HttpBackendConfig cfg_;
    std::string origin_;
    std::string path_;
    std::atomic<int> last_attempts_{0};
};

/// Parses a chat-completions response body.
CompletionResponse parse_completion_body(const json& body, const CompletionRequest& req);

std::string base64_encode(std::string_view bytes);
/// "data:image/png;base64,..." for the file at `path`. Throws on I/O errors.
std::string image_data_url(const std::string& path);

// ---------------------------------------------------------------------------

struct ScriptEntry {
    std::string text;
    std::optional<std::int64_t> tokens_in;
    std::optional<std::int64_t> tokens_out;
    std::int64_t latency_ms = 0;
    /// Reported as estimated even when counts are given (trace replay).
    bool tokens_estimated = false;
};

void from_json(const json& j, ScriptEntry& e);
void to_json(json& j, const ScriptEntry& e);

/// Deterministic backend replaying canned responses.
///
/// Sequential mode returns entries in order regardless of the request.
/// Role-keyed mode keeps one queue per agent label, so scenarios can be
/// written without predicting the interleaving of calls. Unset token counts
/// fall back to the character estimate.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptEntry> sequence);
    explicit ScriptedBackend(std::map<std::string, std::vector<ScriptEntry>> by_agent);
    ScriptedBackend(ScriptedBackend&& other) noexcept;

    static ScriptedBackend from_texts(const std::vector<std::string>& texts);

    CompletionResponse complete(const CompletionRequest& req) override;

    std::int64_t calls() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mu_;
    bool keyed_ = false;
    std::deque<ScriptEntry> sequence_;
    std::map<std::string, std::deque<ScriptEntry>> by_agent_;
    std::int64_t calls_ = 0;
};

/// Backend replaying the responses of `trace` in seq order, with the
/// recorded token counts and latencies.
ScriptedBackend scripted_from_trace(const RunTrace& trace);

/// Wraps a callable; handy for tests and adapters.
class CallbackBackend final : public Backend {
public:
    using Fn = std::function<CompletionResponse(const CompletionRequest&)>;
    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
    CompletionResponse complete(const CompletionRequest& req) override { return fn_(req); }

private:
    Fn fn_;
};

} // namespace minions
