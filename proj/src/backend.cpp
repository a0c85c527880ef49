#include "minions/backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

namespace minions {

std::string_view to_string(MessageRole r) { return r == MessageRole::user ? "user" : "assistant"; }

void CompletionRequest::validate() const
{
    if (messages.empty()) {
        throw std::invalid_argument("completion request has no messages");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw std::invalid_argument("temperature must lie in [0, 2]");
    }
    if (max_tokens && *max_tokens <= 0) {
        throw std::invalid_argument("max_tokens must be positive");
    }
}

std::int64_t estimate_tokens(std::string_view text)
{
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t estimate_prompt_tokens(const CompletionRequest& req)
{
    std::size_t chars = req.system_prompt.size();
    for (const auto& m : req.messages) chars += m.content.size();
    return static_cast<std::int64_t>((chars + 3) / 4);
}

ProviderError::ProviderError(int status, std::string body)
    : BackendError("provider returned HTTP " + std::to_string(status) + ": " + body.substr(0, 512)),
      status_(status),
      body_(std::move(body))
{
}

ScriptExhausted::ScriptExhausted(std::int64_t call_number, const std::string& agent)
    : BackendError("script exhausted at call seq " + std::to_string(call_number) +
                   (agent.empty() ? std::string() : " (agent " + agent + ")")),
      call_number_(call_number)
{
}

// ---------------------------------------------------------------------------

void to_json(json& j, const HttpBackendConfig& c)
{
    j = json{{"endpoint", c.endpoint},
             {"model", c.model},
             {"api_key_env", c.api_key_env},
             {"retries", c.retries},
             {"timeout_s", c.timeout.count()},
             {"backoff_ms", c.backoff.count()}};
}

void from_json(const json& j, HttpBackendConfig& c)
{
    c.endpoint = j.value("endpoint", std::string{});
    c.model = j.value("model", std::string{});
    c.api_key_env = j.value("api_key_env", std::string{});
    c.retries = j.value("retries", 2);
    c.timeout = std::chrono::seconds(j.value("timeout_s", 300));
    c.backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
    if (c.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

std::string base64_encode(std::string_view bytes)
{
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        auto b0 = static_cast<unsigned char>(bytes[i]);
        auto b1 = static_cast<unsigned char>(bytes[i + 1]);
        auto b2 = static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[b0 >> 2];
        out += kAlphabet[((b0 & 0x03) << 4) | (b1 >> 4)];
        out += kAlphabet[((b1 & 0x0f) << 2) | (b2 >> 6)];
        out += kAlphabet[b2 & 0x3f];
    }
    if (i < bytes.size()) {
        auto b0 = static_cast<unsigned char>(bytes[i]);
        out += kAlphabet[b0 >> 2];
        if (i + 1 < bytes.size()) {
            auto b1 = static_cast<unsigned char>(bytes[i + 1]);
            out += kAlphabet[((b0 & 0x03) << 4) | (b1 >> 4)];
            out += kAlphabet[(b1 & 0x0f) << 2];
        } else {
            out += kAlphabet[(b0 & 0x03) << 4];
            out += '=';
        }
        out += '=';
    }
    return out;
}

std::string image_data_url(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BackendError("cannot read image: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string mime = "image/png";
    if (ext == ".jpg" || ext == ".jpeg") mime = "image/jpeg";
    else if (ext == ".gif") mime = "image/gif";
    else if (ext == ".webp") mime = "image/webp";
    return "data:" + mime + ";base64," + base64_encode(buf.str());
}

// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg))
{
    auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint must be an absolute http(s) URL: " + cfg_.endpoint);
    }
    auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        origin_ = cfg_.endpoint;
        path_ = "/v1/chat/completions";
    } else {
        origin_ = cfg_.endpoint.substr(0, path_start);
        path_ = cfg_.endpoint.substr(path_start);
    }
}

json HttpBackend::build_body(const CompletionRequest& req) const
{
    json messages = json::array();
    if (!req.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    }
    for (const auto& m : req.messages) {
        if (m.images.empty()) {
            messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
            continue;
        }
        json parts = json::array();
        parts.push_back({{"type", "text"}, {"text", m.content}});
        for (const auto& img : m.images) {
            parts.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(img)}}}});
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", std::move(parts)}});
    }
    json body{{"model", cfg_.model}, {"messages", std::move(messages)}, {"temperature", req.temperature}};
    if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
    return body;
}

CompletionResponse parse_completion_body(const json& body, const CompletionRequest& req)
{
    CompletionResponse out;
    const json& choices = body.at("choices");
    if (!choices.is_array() || choices.empty()) {
        throw BackendError("response carries no choices");
    }
    const json& content = choices[0].at("message").at("content");
    if (content.is_string()) {
        out.text = content.get<std::string>();
    } else if (content.is_array()) {
        for (const auto& part : content) {
            if (part.value("type", "") == "text") out.text += part.value("text", "");
        }
    } else if (!content.is_null()) {
        throw BackendError("unexpected message content type");
    }

    auto usage = body.find("usage");
    if (usage != body.end() && usage->is_object() && usage->contains("prompt_tokens") &&
        usage->contains("completion_tokens")) {
        out.tokens_in = std::max<std::int64_t>(0, (*usage)["prompt_tokens"].get<std::int64_t>());
        out.tokens_out = std::max<std::int64_t>(0, (*usage)["completion_tokens"].get<std::int64_t>());
    } else {
        out.tokens_in = estimate_prompt_tokens(req);
        out.tokens_out = estimate_tokens(out.text);
        out.tokens_estimated = true;
    }
    return out;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& req)
{
    req.validate();
    const std::string payload = build_body(req).dump();

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const int max_attempts = cfg_.retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        last_attempts_ = attempt;
        httplib::Client client(origin_);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_write_timeout(cfg_.timeout);

        auto started = std::chrono::steady_clock::now();
        auto res = client.Post(path_, headers, payload, "application/json");
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);

        bool transient = false;
        if (!res) {
            last_error = "transport failure contacting " + origin_ + ": " + httplib::to_string(res.error());
            transient = true;
        } else if (res->status == 429 || res->status >= 500) {
            if (attempt == max_attempts) throw ProviderError(res->status, res->body);
            transient = true;
        } else if (res->status < 200 || res->status >= 300) {
            throw ProviderError(res->status, res->body);
        } else {
            json body;
            try {
                body = json::parse(res->body);
            } catch (const json::exception& e) {
                throw BackendError(std::string("malformed response body: ") + e.what());
            }
            CompletionResponse out;
            try {
                out = parse_completion_body(body, req);
            } catch (const json::exception& e) {
                throw BackendError(std::string("unexpected response shape: ") + e.what());
            }
            out.latency_ms = elapsed.count();
            return out;
        }

        if (transient && attempt < max_attempts && cfg_.backoff.count() > 0) {
            std::this_thread::sleep_for(cfg_.backoff * (1 << (attempt - 1)));
        }
    }
    throw TransportError(last_error + " (after " + std::to_string(max_attempts) + " attempts)", max_attempts);
}

// ---------------------------------------------------------------------------

void from_json(const json& j, ScriptEntry& e)
{
    if (j.is_string()) {
        e = ScriptEntry{j.get<std::string>(), std::nullopt, std::nullopt, 0, false};
        return;
    }
    e.text = j.at("text").get<std::string>();
    e.tokens_in = j.contains("tokens_in") ? std::optional(j["tokens_in"].get<std::int64_t>()) : std::nullopt;
    e.tokens_out = j.contains("tokens_out") ? std::optional(j["tokens_out"].get<std::int64_t>()) : std::nullopt;
    e.latency_ms = j.value("latency_ms", std::int64_t{0});
    e.tokens_estimated = j.value("tokens_estimated", false);
}

void to_json(json& j, const ScriptEntry& e)
{
    j = json{{"text", e.text}};
    if (e.tokens_in) j["tokens_in"] = *e.tokens_in;
    if (e.tokens_out) j["tokens_out"] = *e.tokens_out;
    if (e.latency_ms != 0) j["latency_ms"] = e.latency_ms;
    if (e.tokens_estimated) j["tokens_estimated"] = true;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> sequence)
    : sequence_(sequence.begin(), sequence.end())
{
}

ScriptedBackend::ScriptedBackend(std::map<std::string, std::vector<ScriptEntry>> by_agent) : keyed_(true)
{
    for (auto& [agent, entries] : by_agent) {
        by_agent_[agent] = std::deque<ScriptEntry>(entries.begin(), entries.end());
    }
}

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept
{
    std::lock_guard lock(other.mu_);
    keyed_ = other.keyed_;
    sequence_ = std::move(other.sequence_);
    by_agent_ = std::move(other.by_agent_);
    calls_ = other.calls_;
}

ScriptedBackend ScriptedBackend::from_texts(const std::vector<std::string>& texts)
{
    std::vector<ScriptEntry> entries;
    entries.reserve(texts.size());
    for (const auto& t : texts) entries.push_back({t, std::nullopt, std::nullopt, 0, false});
    return ScriptedBackend(std::move(entries));
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& req)
{
    req.validate();
    std::lock_guard lock(mu_);
    ++calls_;
    std::deque<ScriptEntry>* queue = &sequence_;
    if (keyed_) {
        auto it = by_agent_.find(req.agent);
        if (it == by_agent_.end()) throw ScriptExhausted(calls_, req.agent);
        queue = &it->second;
    }
    if (queue->empty()) {
        throw ScriptExhausted(calls_, req.agent);
    }
    ScriptEntry e = std::move(queue->front());
    queue->pop_front();

    CompletionResponse out;
    out.text = std::move(e.text);
    out.tokens_estimated = e.tokens_estimated || !e.tokens_in || !e.tokens_out;
    out.tokens_in = e.tokens_in.value_or(estimate_prompt_tokens(req));
    out.tokens_out = e.tokens_out.value_or(estimate_tokens(out.text));
    out.latency_ms = e.latency_ms;
    return out;
}

std::int64_t ScriptedBackend::calls() const
{
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t ScriptedBackend::remaining() const
{
    std::lock_guard lock(mu_);
    std::size_t n = sequence_.size();
    for (const auto& [_, q] : by_agent_) n += q.size();
    return n;
}

ScriptedBackend scripted_from_trace(const RunTrace& trace)
{
    std::vector<const AgentCall*> ordered;
    ordered.reserve(trace.calls.size());
    for (const auto& c : trace.calls) {
        if (c.studio != Studio::Grader) ordered.push_back(&c);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const AgentCall* a, const AgentCall* b) { return a->seq < b->seq; });

    std::vector<ScriptEntry> entries;
    entries.reserve(ordered.size());
    for (const AgentCall* c : ordered) {
        entries.push_back({c->response, c->tokens_in, c->tokens_out, c->wall_ms, c->tokens_estimated});
    }
    return ScriptedBackend(std::move(entries));
}

} // namespace minions
