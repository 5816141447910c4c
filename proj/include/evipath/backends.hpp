#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evipath::backends {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
std::optional<Role> role_from(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct GenerationRequest {
    std::vector<ChatMessage> messages;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
    std::optional<uint64_t> seed;
};

struct EmbeddingVector {
    std::vector<double> values;
    size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// Throws DimensionMismatch on unequal dims, ZeroVector on an all-zero input.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Stable key for scripted replay: hash over "role:content\n" per message.
std::string fingerprint(const std::vector<ChatMessage>& messages);

// In-flight cap plus request-rate limiting, shared across backend calls.
class Semaphore {
public:
    explicit Semaphore(size_t count) : count_(count) {}
    void acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    size_t count_;
};

class TokenBucket {
public:
    // rate_per_sec == 0 disables limiting.
    TokenBucket(double rate_per_sec, double burst);
    void take();

private:
    std::mutex mu_;
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

struct Throttle {
    explicit Throttle(size_t max_in_flight, double rate_per_sec = 0.0, double burst = 1.0)
        : semaphore(max_in_flight), bucket(rate_per_sec, burst) {}
    Semaphore semaphore;
    TokenBucket bucket;
};

inline constexpr size_t kDefaultContextChars = 120000;

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    // Single attempt; retry/limits live in the free generate() below.
    virtual std::string generate_once(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
    virtual size_t context_chars() const { return kDefaultContextChars; }

    void set_throttle(std::shared_ptr<Throttle> throttle) { throttle_ = std::move(throttle); }
    Throttle* throttle() const { return throttle_.get(); }

private:
    std::shared_ptr<Throttle> throttle_;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<EmbeddingVector> embed_once(const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;
    // 0 = not declared; otherwise every returned vector must have this dim.
    virtual size_t dim() const { return 0; }

    void set_throttle(std::shared_ptr<Throttle> throttle) { throttle_ = std::move(throttle); }
    Throttle* throttle() const { return throttle_.get(); }

private:
    std::shared_ptr<Throttle> throttle_;
};

struct RetryPolicy {
    int attempts = 3;
    std::vector<int64_t> backoff_ms = {1000, 2000, 4000};
    double jitter = 0.2; // +-20%
    uint64_t jitter_seed = 0x5eed;
    // injectable for tests; defaults to an actual sleep
    std::function<void(int64_t)> sleeper;

    static RetryPolicy none() { return RetryPolicy{1, {}, 0.0, 0, nullptr}; }
};

// Applies the context-size guard (before any backend call), the backend's
// throttle, and retry with exponential backoff on BackendUnavailable /
// MalformedResponse. Pure request -> text from the caller's view.
std::string generate(GenerationBackend& backend, const GenerationRequest& request,
                     const RetryPolicy& policy = {});

// Order-preserving; [] -> [] without touching the backend. Verifies uniform
// dimensionality (DimensionMismatch). Retries like generate().
std::vector<EmbeddingVector> embed(EmbeddingBackend& backend,
                                   const std::vector<std::string>& texts,
                                   const RetryPolicy& policy = {});

// --- deterministic backends -------------------------------------------------

class ScriptedGenerationBackend : public GenerationBackend {
public:
    // Keyed replay: fingerprint -> response.
    explicit ScriptedGenerationBackend(std::map<std::string, std::string> responses,
                                       int64_t latency_ms = 0);
    // Ordered-queue replay for scripted dialogues.
    explicit ScriptedGenerationBackend(std::vector<std::string> queue, int64_t latency_ms = 0);
    // Fixture file: JSONL of {"key","response"} rows, or one {"queue": [...]}.
    static std::unique_ptr<ScriptedGenerationBackend>
    from_file(const std::filesystem::path& path, int64_t latency_ms = 0);

    std::string generate_once(const GenerationRequest& request) override;
    std::string id() const override { return "scripted"; }

    size_t remaining_queue() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::string> responses_;
    std::deque<std::string> queue_;
    bool keyed_;
    int64_t latency_ms_;
};

class CallbackGenerationBackend : public GenerationBackend {
public:
    using Fn = std::function<std::string(const GenerationRequest&)>;
    explicit CallbackGenerationBackend(Fn fn, int64_t latency_ms = 0,
                                       size_t context_chars = kDefaultContextChars)
        : fn_(std::move(fn)), latency_ms_(latency_ms), context_chars_(context_chars) {}
    std::string generate_once(const GenerationRequest& request) override;
    std::string id() const override { return "callback"; }
    size_t context_chars() const override { return context_chars_; }

private:
    Fn fn_;
    int64_t latency_ms_;
    size_t context_chars_;
};

class ScriptedEmbeddingBackend : public EmbeddingBackend {
public:
    explicit ScriptedEmbeddingBackend(std::map<std::string, std::vector<double>> table);
    std::vector<EmbeddingVector> embed_once(const std::vector<std::string>& texts) override;
    std::string id() const override { return "scripted-embedding"; }
    size_t dim() const override { return dim_; }

private:
    std::map<std::string, std::vector<double>> table_;
    size_t dim_ = 0;
};

// Content-hashed pseudo-embeddings: deterministic, portable (integer
// arithmetic only), equal texts -> equal vectors.
class HashedEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HashedEmbeddingBackend(size_t dim = 64) : dim_(dim) {}
    std::vector<EmbeddingVector> embed_once(const std::vector<std::string>& texts) override;
    std::string id() const override { return "hashed-embedding"; }
    size_t dim() const override { return dim_; }

private:
    size_t dim_;
};

// --- OpenAI-compatible HTTP backends ----------------------------------------

struct HttpConfig {
    std::string base_url; // e.g. http://localhost:8000 or http://host/v1
    std::string api_key;  // optional bearer token
    std::string model;
    int timeout_sec = 120;
    size_t context_chars = kDefaultContextChars;
};

class HttpGenerationBackend : public GenerationBackend {
public:
    explicit HttpGenerationBackend(HttpConfig config);
    ~HttpGenerationBackend() override;
    std::string generate_once(const GenerationRequest& request) override;
    std::string id() const override;
    size_t context_chars() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(HttpConfig config);
    ~HttpEmbeddingBackend() override;
    std::vector<EmbeddingVector> embed_once(const std::vector<std::string>& texts) override;
    std::string id() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace evipath::backends
