#pragma once

// Chat-completion and embedding backends behind one interface: an
// OpenAI-compatible HTTP client (POST {base_url}/chat/completions and
// {base_url}/embeddings) and a seeded deterministic mock whose outputs are
// pure functions of (seed, inputs).
//
// Retry policy: timeouts, connection failures, HTTP 429 and 5xx are retried
// with exponential backoff up to max_retries; authentication failures and
// other 4xx perform exactly one attempt. Wire bodies carry the request's
// sampling parameters unmodified; the exact schema is pinned by golden files
// (docs/wire-protocol.md).

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "convosim/domain.hpp"

namespace convosim {

enum class BackendKind { HttpOpenAICompatible, Mock };

inline const char* to_string(BackendKind k) {
    return k == BackendKind::HttpOpenAICompatible ? "http_openai_compatible"
                                                  : "mock";
}

inline BackendKind parse_backend_kind(const std::string& s) {
    if (s == "http_openai_compatible") return BackendKind::HttpOpenAICompatible;
    if (s == "mock") return BackendKind::Mock;
    throw std::invalid_argument("unknown backend kind: " + s);
}

struct BackendDescriptor {
    std::string id;
    BackendKind kind = BackendKind::Mock;
    std::string base_url;    // http kind only
    std::string model_label;
    std::string auth_env;    // name of the env var holding the API key
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{250};  // doubles per retry
    int max_in_flight = 4;
    std::uint64_t mock_seed = 0;  // mock kind only
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_message;
    SamplingParams sampling;
    std::string model_label;
};

enum class FinishReason { Stop, Length, Other };

inline const char* to_string(FinishReason r) {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Other: return "other";
    }
    return "other";
}

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    TokenUsage usage;
};

class BackendError : public std::runtime_error {
public:
    enum class Kind { Transport, Auth, Http, MalformedResponse };

    BackendError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

namespace detail {

inline std::uint64_t fnv1a64(std::uint64_t h, const void* data,
                             std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t h, const std::string& s) {
    return fnv1a64(h, s.data(), s.size());
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& salt) {
    std::uint64_t h = kFnvOffset;
    h = fnv1a64(h, &seed, sizeof seed);
    h = fnv1a64(h, salt);
    return h;
}

inline long whitespace_word_count(const std::string& text) {
    long words = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

}  // namespace detail

// --- deterministic mock -----------------------------------------------------

namespace mock_detail {

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "homework",  "sure",      "okay",     "maybe",     "later",
        "dinner",    "please",    "thanks",   "today",     "school",
        "game",      "practice",  "remember", "rules",     "together",
        "great",     "wonderful", "fine",     "chores",    "listen",
        "because",   "tomorrow",  "now",      "room",      "clean",
        "friends",   "movie",     "snack",    "study",     "math",
        "book",      "time",      "early",    "bed",       "done",
        "first",     "help",      "ask",      "tell",      "soon",
        "yes",       "no",        "we'll",    "talk",      "plan",
        "weekend",   "outside",   "play",     "focus",     "quiet",
        "respect",   "effort",    "proud",    "try",       "again",
        "careful",   "money",     "allowance", "phone",    "limits",
        "choice",    "answer",    "questions", "ready"};
    return words;
}

// xorshift-style step; enough mixing for deterministic text generation.
inline std::uint64_t next(std::uint64_t& state) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
}

}  // namespace mock_detail

// Deterministic chat completion: the text is a pure function of
// (seed, system_prompt, user_message) and never exceeds
// sampling.max_output_tokens whitespace-separated words.
inline ChatResponse mock_chat_complete(std::uint64_t seed,
                                       const ChatRequest& request) {
    if (request.system_prompt.empty())
        throw std::invalid_argument("chat_complete: empty system_prompt");
    if (request.user_message.empty())
        throw std::invalid_argument("chat_complete: empty user_message");
    std::uint64_t h = detail::kFnvOffset;
    h = detail::fnv1a64(h, &seed, sizeof seed);
    h = detail::fnv1a64(h, request.system_prompt);
    h = detail::fnv1a64(h, "\x1f");
    h = detail::fnv1a64(h, request.user_message);
    std::uint64_t state = h | 1;

    const auto& vocab = mock_detail::vocabulary();
    const int cap = std::max(1, request.sampling.max_output_tokens);
    const int words =
        1 + static_cast<int>(mock_detail::next(state) %
                             static_cast<std::uint64_t>(std::min(cap, 24)));
    std::string text;
    for (int i = 0; i < words; ++i) {
        if (i > 0) text.push_back(' ');
        text += vocab[mock_detail::next(state) % vocab.size()];
    }
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    text.push_back(mock_detail::next(state) % 4 == 0 ? '?' : '.');

    ChatResponse response;
    response.text = std::move(text);
    response.finish_reason = FinishReason::Stop;
    response.usage.prompt_tokens =
        detail::whitespace_word_count(request.system_prompt) +
        detail::whitespace_word_count(request.user_message);
    response.usage.completion_tokens = words;
    return response;
}

// Deterministic embedding: character trigrams (with begin/end sentinels)
// hashed into 64 buckets, L2-normalized. Never all-zero for non-empty text.
inline EmbeddingVector mock_embed(std::uint64_t seed, const std::string& text) {
    if (text.empty()) throw std::invalid_argument("embed: empty text");
    constexpr std::size_t kDim = 64;
    std::vector<double> values(kDim, 0.0);
    std::string padded;
    padded.reserve(text.size() + 2);
    padded.push_back('\x02');
    padded += text;
    padded.push_back('\x03');
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        std::uint64_t h = detail::kFnvOffset;
        h = detail::fnv1a64(h, &seed, sizeof seed);
        h = detail::fnv1a64(h, padded.data() + i, 3);
        values[h % kDim] += 1.0;
    }
    double norm = 0.0;
    for (double v : values) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : values) v /= norm;
    return {std::move(values)};
}

// A backend whose chat and embedding outputs are pure functions of
// (seed, inputs); same seed and inputs always yield byte-identical results.
inline BackendDescriptor mock_backend(std::uint64_t seed) {
    BackendDescriptor d;
    d.id = "mock-" + std::to_string(seed);
    d.kind = BackendKind::Mock;
    d.model_label = "mock";
    d.mock_seed = seed;
    return d;
}

// --- OpenAI-compatible HTTP client -------------------------------------------

namespace detail {

struct ParsedBaseUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix, "" or "/v1"-style
};

inline ParsedBaseUrl split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw std::invalid_argument("base_url must include a scheme: " +
                                    base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    ParsedBaseUrl parsed;
    if (path_start == std::string::npos) {
        parsed.origin = base_url;
    } else {
        parsed.origin = base_url.substr(0, path_start);
        parsed.prefix = base_url.substr(path_start);
    }
    while (!parsed.prefix.empty() && parsed.prefix.back() == '/')
        parsed.prefix.pop_back();
    return parsed;
}

inline httplib::Headers auth_headers(const BackendDescriptor& backend) {
    httplib::Headers headers;
    if (!backend.auth_env.empty()) {
        if (const char* key = std::getenv(backend.auth_env.c_str());
            key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

// POST with the retry policy described at the top of this header. Returns
// the response body of the first 2xx answer.
inline std::string post_with_retries(const BackendDescriptor& backend,
                                     const std::string& path,
                                     const std::string& body) {
    const ParsedBaseUrl url = split_base_url(backend.base_url);
    auto backoff = backend.retry_backoff;
    const int max_attempts = std::max(0, backend.max_retries) + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Client client(url.origin);
        client.set_connection_timeout(backend.timeout);
        client.set_read_timeout(backend.timeout);
        client.set_write_timeout(backend.timeout);
        client.set_default_headers(auth_headers(backend));

        auto result = client.Post(url.prefix + path, body, "application/json");
        bool retryable = false;
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            retryable = true;
        } else if (result->status >= 200 && result->status < 300) {
            return result->body;
        } else if (result->status == 401 || result->status == 403) {
            throw BackendError(BackendError::Kind::Auth,
                               backend.id + ": authentication failed (HTTP " +
                                   std::to_string(result->status) + ")");
        } else if (result->status == 429 || result->status >= 500) {
            last_error = "HTTP " + std::to_string(result->status);
            retryable = true;
        } else {
            throw BackendError(BackendError::Kind::Http,
                               backend.id + ": HTTP " +
                                   std::to_string(result->status) + " from " +
                                   url.origin + url.prefix + path);
        }
        if (retryable && attempt < max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw BackendError(BackendError::Kind::Transport,
                       backend.id + ": " + last_error + " after " +
                           std::to_string(max_attempts) + " attempts");
}

}  // namespace detail

// Exact wire body for a chat completion; golden files pin these bytes.
inline nlohmann::json chat_request_body(const ChatRequest& request) {
    return {{"model", request.model_label},
            {"messages",
             {{{"role", "system"}, {"content", request.system_prompt}},
              {{"role", "user"}, {"content", request.user_message}}}},
            {"temperature", request.sampling.temperature},
            {"top_p", request.sampling.top_p},
            {"max_tokens", request.sampling.max_output_tokens}};
}

inline nlohmann::json embedding_request_body(const std::string& model_label,
                                             const std::string& text) {
    return {{"model", model_label}, {"input", text}};
}

inline ChatResponse http_chat_complete(const BackendDescriptor& backend,
                                       const ChatRequest& request) {
    const std::string body =
        detail::post_with_retries(backend, "/chat/completions",
                                  chat_request_body(request).dump());
    nlohmann::json payload;
    try {
        payload = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           backend.id + ": invalid response JSON: " + e.what());
    }
    try {
        const auto& choice = payload.at("choices").at(0);
        ChatResponse response;
        response.text = choice.at("message").at("content").get<std::string>();
        const std::string reason = choice.value("finish_reason", "other");
        response.finish_reason = reason == "stop"     ? FinishReason::Stop
                                 : reason == "length" ? FinishReason::Length
                                                      : FinishReason::Other;
        if (payload.contains("usage")) {
            const auto& usage = payload.at("usage");
            response.usage.prompt_tokens = usage.value("prompt_tokens", 0L);
            response.usage.completion_tokens =
                usage.value("completion_tokens", 0L);
        }
        if (response.text.empty() &&
            response.finish_reason != FinishReason::Other)
            throw BackendError(BackendError::Kind::MalformedResponse,
                               backend.id + ": empty completion text");
        return response;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           backend.id +
                               ": unexpected response shape: " + e.what());
    }
}

inline EmbeddingVector http_embed(const BackendDescriptor& backend,
                                  const std::string& text) {
    const std::string body = detail::post_with_retries(
        backend, "/embeddings",
        embedding_request_body(backend.model_label, text).dump());
    nlohmann::json payload;
    try {
        payload = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           backend.id + ": invalid response JSON: " + e.what());
    }
    try {
        const auto& data = payload.at("data").at(0).at("embedding");
        EmbeddingVector embedding;
        embedding.values.reserve(data.size());
        for (const auto& v : data) embedding.values.push_back(v.get<double>());
        if (embedding.values.empty())
            throw BackendError(BackendError::Kind::MalformedResponse,
                               backend.id + ": empty embedding");
        bool all_zero = true;
        for (double v : embedding.values)
            if (v != 0.0) all_zero = false;
        if (all_zero)
            throw BackendError(BackendError::Kind::MalformedResponse,
                               backend.id + ": all-zero embedding");
        return embedding;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           backend.id +
                               ": unexpected response shape: " + e.what());
    }
}

// --- dispatch ----------------------------------------------------------------

inline ChatResponse chat_complete(const BackendDescriptor& backend,
                                  const ChatRequest& request) {
    if (request.system_prompt.empty())
        throw std::invalid_argument("chat_complete: empty system_prompt");
    if (request.user_message.empty())
        throw std::invalid_argument("chat_complete: empty user_message");
    switch (backend.kind) {
        case BackendKind::Mock:
            return mock_chat_complete(backend.mock_seed, request);
        case BackendKind::HttpOpenAICompatible:
            return http_chat_complete(backend, request);
    }
    throw std::logic_error("unreachable backend kind");
}

inline EmbeddingVector embed(const BackendDescriptor& backend,
                             const std::string& text) {
    if (text.empty()) throw std::invalid_argument("embed: empty text");
    switch (backend.kind) {
        case BackendKind::Mock:
            return mock_embed(backend.mock_seed, text);
        case BackendKind::HttpOpenAICompatible:
            return http_embed(backend, text);
    }
    throw std::logic_error("unreachable backend kind");
}

// --- registry ----------------------------------------------------------------

// Named backends with a per-backend cap on concurrent in-flight requests.
// Descriptors are immutable once added; the registry itself may be shared
// across simulation threads.
class BackendRegistry {
public:
    void add(BackendDescriptor descriptor) {
        if (descriptor.id.empty())
            throw std::invalid_argument("backend id must be non-empty");
        if (descriptor.kind == BackendKind::HttpOpenAICompatible &&
            descriptor.base_url.empty())
            throw std::invalid_argument("backend '" + descriptor.id +
                                        "': http kind requires base_url");
        if (descriptor.kind == BackendKind::Mock &&
            !descriptor.base_url.empty())
            throw std::invalid_argument("backend '" + descriptor.id +
                                        "': mock kind must not set base_url");
        auto entry = std::make_unique<Entry>();
        entry->descriptor = std::move(descriptor);
        entry->in_flight_cap = std::max(1, entry->descriptor.max_in_flight);
        entries_[entry->descriptor.id] = std::move(entry);
    }

    bool contains(const std::string& id) const { return entries_.count(id) > 0; }

    const BackendDescriptor& get(const std::string& id) const {
        return find(id).descriptor;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [id, entry] : entries_) out.push_back(id);
        return out;
    }

    ChatResponse chat_complete(const std::string& id,
                               ChatRequest request) const {
        const Entry& entry = find(id);
        if (request.model_label.empty())
            request.model_label = entry.descriptor.model_label;
        InFlightPass pass(entry);
        return convosim::chat_complete(entry.descriptor, request);
    }

    EmbeddingVector embed(const std::string& id, const std::string& text) const {
        const Entry& entry = find(id);
        InFlightPass pass(entry);
        return convosim::embed(entry.descriptor, text);
    }

    // Replaces every backend with a deterministic mock, preserving ids and
    // model labels so manifests and analyses group identically offline.
    void swap_all_for_mocks(std::uint64_t seed) {
        for (auto& [id, entry] : entries_) {
            BackendDescriptor& d = entry->descriptor;
            d.kind = BackendKind::Mock;
            d.base_url.clear();
            d.auth_env.clear();
            d.mock_seed = detail::mix_seed(seed, id);
            if (d.model_label.empty()) d.model_label = "mock";
        }
    }

private:
    struct Entry {
        BackendDescriptor descriptor;
        int in_flight_cap = 4;
        mutable int in_flight = 0;
        mutable std::mutex mutex;
        mutable std::condition_variable released;
    };

    // RAII slot under the per-backend in-flight cap.
    class InFlightPass {
    public:
        explicit InFlightPass(const Entry& entry) : entry_(entry) {
            std::unique_lock lock(entry_.mutex);
            entry_.released.wait(
                lock, [&] { return entry_.in_flight < entry_.in_flight_cap; });
            ++entry_.in_flight;
        }
        ~InFlightPass() {
            {
                std::lock_guard lock(entry_.mutex);
                --entry_.in_flight;
            }
            entry_.released.notify_one();
        }
        InFlightPass(const InFlightPass&) = delete;
        InFlightPass& operator=(const InFlightPass&) = delete;

    private:
        const Entry& entry_;
    };

    const Entry& find(const std::string& id) const {
        const auto it = entries_.find(id);
        if (it == entries_.end())
            throw std::invalid_argument("unknown backend id: " + id);
        return *it->second;
    }

    std::map<std::string, std::unique_ptr<Entry>> entries_;
};

}  // namespace convosim
