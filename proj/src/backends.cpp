#include "evipath/backends.hpp"

#include "evipath/errors.hpp"
#include "evipath/util.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace evipath::backends {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> role_from(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    return std::nullopt;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim() || u.dim() == 0)
        throw DimensionMismatch("cosine: dims " + std::to_string(u.dim()) + " vs " +
                                std::to_string(v.dim()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine of an all-zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::string fingerprint(const std::vector<ChatMessage>& messages) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& m : messages) {
        h = util::fnv1a64(to_string(m.role), h);
        h = util::fnv1a64(":", h);
        h = util::fnv1a64(m.content, h);
        h = util::fnv1a64("\n", h);
    }
    return util::hex16(h);
}

void Semaphore::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
}

void Semaphore::release() {
    {
        std::lock_guard lock(mu_);
        ++count_;
    }
    cv_.notify_one();
}

TokenBucket::TokenBucket(double rate_per_sec, double burst)
    : rate_(rate_per_sec), burst_(burst), tokens_(burst),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::take() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_s = (1.0 - tokens_) / rate_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        lock.lock();
    }
}

namespace {

struct ThrottleGuard {
    Throttle* throttle;
    explicit ThrottleGuard(Throttle* t) : throttle(t) {
        if (throttle) {
            throttle->semaphore.acquire();
            throttle->bucket.take();
        }
    }
    ~ThrottleGuard() {
        if (throttle) throttle->semaphore.release();
    }
};

size_t request_chars(const GenerationRequest& request) {
    size_t n = 0;
    for (const auto& m : request.messages) n += m.content.size();
    return n;
}

template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) {
    uint64_t jitter_state = policy.jitter_seed;
    int attempts = std::max(1, policy.attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const BackendUnavailable&) {
            if (attempt >= attempts) throw;
        } catch (const MalformedResponse&) {
            if (attempt >= attempts) throw;
        }
        int64_t base = 1000;
        size_t idx = static_cast<size_t>(attempt - 1);
        if (idx < policy.backoff_ms.size()) base = policy.backoff_ms[idx];
        else if (!policy.backoff_ms.empty()) base = policy.backoff_ms.back();
        // jitter in [-j, +j]
        double unit = static_cast<double>(util::splitmix64(jitter_state) >> 11) /
                      static_cast<double>(1ull << 53);
        double factor = 1.0 + policy.jitter * (2.0 * unit - 1.0);
        auto delay = static_cast<int64_t>(static_cast<double>(base) * factor);
        if (policy.sleeper) policy.sleeper(delay);
        else std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
}

} // namespace

std::string generate(GenerationBackend& backend, const GenerationRequest& request,
                     const RetryPolicy& policy) {
    if (request_chars(request) > backend.context_chars())
        throw ContextTooLong("request of " + std::to_string(request_chars(request)) +
                             " chars exceeds limit of " +
                             std::to_string(backend.context_chars()));
    return with_retry(policy, [&] {
        ThrottleGuard guard(backend.throttle());
        return backend.generate_once(request);
    });
}

std::vector<EmbeddingVector> embed(EmbeddingBackend& backend,
                                   const std::vector<std::string>& texts,
                                   const RetryPolicy& policy) {
    if (texts.empty()) return {};
    auto out = with_retry(policy, [&] {
        ThrottleGuard guard(backend.throttle());
        return backend.embed_once(texts);
    });
    if (out.size() != texts.size())
        throw MalformedResponse("embedding count " + std::to_string(out.size()) +
                                " != input count " + std::to_string(texts.size()));
    size_t expect = backend.dim() ? backend.dim() : out.front().dim();
    for (const auto& v : out)
        if (v.dim() != expect || v.dim() == 0)
            throw DimensionMismatch("embedding dim " + std::to_string(v.dim()) +
                                    ", expected " + std::to_string(expect));
    return out;
}

// --- scripted ---------------------------------------------------------------

ScriptedGenerationBackend::ScriptedGenerationBackend(
    std::map<std::string, std::string> responses, int64_t latency_ms)
    : responses_(std::move(responses)), keyed_(true), latency_ms_(latency_ms) {}

ScriptedGenerationBackend::ScriptedGenerationBackend(std::vector<std::string> queue,
                                                     int64_t latency_ms)
    : queue_(queue.begin(), queue.end()), keyed_(false), latency_ms_(latency_ms) {}

std::unique_ptr<ScriptedGenerationBackend>
ScriptedGenerationBackend::from_file(const std::filesystem::path& path, int64_t latency_ms) {
    std::map<std::string, std::string> responses;
    std::vector<std::string> queue;
    bool has_queue = false;
    util::for_each_jsonl(path, [&](size_t line_no, const nlohmann::ordered_json& doc) {
        if (doc.contains("queue")) {
            has_queue = true;
            for (const auto& item : doc.at("queue")) queue.push_back(item.get<std::string>());
            return;
        }
        if (!doc.contains("key") || !doc.contains("response"))
            throw SchemaError(line_no, "key", "fixture rows need \"key\" and \"response\"");
        responses[doc.at("key").get<std::string>()] = doc.at("response").get<std::string>();
    });
    if (has_queue)
        return std::make_unique<ScriptedGenerationBackend>(std::move(queue), latency_ms);
    return std::make_unique<ScriptedGenerationBackend>(std::move(responses), latency_ms);
}

std::string ScriptedGenerationBackend::generate_once(const GenerationRequest& request) {
    if (latency_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    std::lock_guard lock(mu_);
    if (keyed_) {
        std::string key = fingerprint(request.messages);
        auto it = responses_.find(key);
        if (it == responses_.end())
            throw BackendUnavailable("no scripted response for fingerprint " + key);
        return it->second;
    }
    if (queue_.empty()) throw BackendUnavailable("scripted queue exhausted");
    std::string out = std::move(queue_.front());
    queue_.pop_front();
    return out;
}

size_t ScriptedGenerationBackend::remaining_queue() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

std::string CallbackGenerationBackend::generate_once(const GenerationRequest& request) {
    if (latency_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    return fn_(request);
}

ScriptedEmbeddingBackend::ScriptedEmbeddingBackend(
    std::map<std::string, std::vector<double>> table)
    : table_(std::move(table)) {
    if (!table_.empty()) dim_ = table_.begin()->second.size();
}

std::vector<EmbeddingVector> ScriptedEmbeddingBackend::embed_once(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto it = table_.find(t);
        if (it == table_.end())
            throw BackendUnavailable("no scripted embedding for: " + t.substr(0, 60));
        out.push_back({it->second});
    }
    return out;
}

std::vector<EmbeddingVector> HashedEmbeddingBackend::embed_once(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        uint64_t state = util::fnv1a64(t);
        EmbeddingVector v;
        v.values.resize(dim_);
        bool all_zero = true;
        for (size_t i = 0; i < dim_; ++i) {
            uint64_t x = util::splitmix64(state);
            // quantized to thousandths in [-1, 1]; float-exact on every platform
            double val = (static_cast<double>(x % 2001) - 1000.0) / 1000.0;
            v.values[i] = static_cast<double>(static_cast<float>(val));
            if (v.values[i] != 0.0) all_zero = false;
        }
        if (all_zero) v.values[0] = 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

// --- HTTP -------------------------------------------------------------------

namespace {

struct ParsedUrl {
    std::string host_port; // scheme://host[:port]
    std::string prefix;    // path prefix, normalized to end without '/'
};

ParsedUrl split_url(const std::string& base_url) {
    ParsedUrl out;
    size_t scheme = base_url.find("://");
    size_t path_start = scheme == std::string::npos ? base_url.find('/')
                                                    : base_url.find('/', scheme + 3);
    if (path_start == std::string::npos) {
        out.host_port = base_url;
    } else {
        out.host_port = base_url.substr(0, path_start);
        out.prefix = base_url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    if (out.prefix.empty()) out.prefix = "/v1";
    return out;
}

json post_json(httplib::Client& client, const std::string& path, const std::string& api_key,
               const json& body) {
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw BackendUnavailable("POST " + path + ": " + httplib::to_string(res.error()));
    if (res->status >= 500)
        throw BackendUnavailable("POST " + path + ": HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw MalformedResponse("POST " + path + ": HTTP " + std::to_string(res->status) +
                                ": " + res->body.substr(0, 200));
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded())
        throw MalformedResponse("POST " + path + ": response is not JSON");
    return doc;
}

} // namespace

struct HttpGenerationBackend::Impl {
    HttpConfig config;
    ParsedUrl url;
    httplib::Client client;
    Impl(HttpConfig c)
        : config(std::move(c)), url(split_url(config.base_url)), client(url.host_port) {
        client.set_connection_timeout(config.timeout_sec);
        client.set_read_timeout(config.timeout_sec);
    }
};

HttpGenerationBackend::HttpGenerationBackend(HttpConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}
HttpGenerationBackend::~HttpGenerationBackend() = default;

std::string HttpGenerationBackend::id() const {
    return "http:" + impl_->config.base_url + "#" + impl_->config.model;
}

size_t HttpGenerationBackend::context_chars() const { return impl_->config.context_chars; }

std::string HttpGenerationBackend::generate_once(const GenerationRequest& request) {
    json body;
    body["model"] = impl_->config.model;
    auto& messages = body["messages"] = json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
    if (request.seed) body["seed"] = *request.seed;

    json doc = post_json(impl_->client, impl_->url.prefix + "/chat/completions",
                         impl_->config.api_key, body);
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw MalformedResponse("chat completion without choices");
    const json& message = doc["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
        throw MalformedResponse("chat completion without message content");
    return message["content"].get<std::string>();
}

struct HttpEmbeddingBackend::Impl {
    HttpConfig config;
    ParsedUrl url;
    httplib::Client client;
    Impl(HttpConfig c)
        : config(std::move(c)), url(split_url(config.base_url)), client(url.host_port) {
        client.set_connection_timeout(config.timeout_sec);
        client.set_read_timeout(config.timeout_sec);
    }
};

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}
HttpEmbeddingBackend::~HttpEmbeddingBackend() = default;

std::string HttpEmbeddingBackend::id() const {
    return "http:" + impl_->config.base_url + "#" + impl_->config.model;
}

std::vector<EmbeddingVector> HttpEmbeddingBackend::embed_once(
    const std::vector<std::string>& texts) {
    json body;
    body["model"] = impl_->config.model;
    body["input"] = texts;
    json doc = post_json(impl_->client, impl_->url.prefix + "/embeddings",
                         impl_->config.api_key, body);
    if (!doc.contains("data") || !doc["data"].is_array())
        throw MalformedResponse("embedding response without data array");
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    size_t fallback = 0;
    for (const auto& item : doc["data"]) {
        size_t idx = item.contains("index") ? item["index"].get<size_t>() : fallback;
        ++fallback;
        if (idx >= out.size()) throw MalformedResponse("embedding index out of range");
        if (!item.contains("embedding") || !item["embedding"].is_array())
            throw MalformedResponse("embedding row without values");
        EmbeddingVector v;
        for (const auto& x : item["embedding"]) v.values.push_back(x.get<double>());
        out[idx] = std::move(v);
        filled[idx] = true;
    }
    for (bool f : filled)
        if (!f) throw MalformedResponse("embedding response missing rows");
    return out;
}

} // namespace evipath::backends
