#include <doctest.h>

#include "evipath/backends.hpp"
#include "evipath/errors.hpp"
#include "evipath/util.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using namespace evipath;
using namespace evipath::backends;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

RetryPolicy fast_policy(std::vector<int64_t>* sleeps = nullptr) {
    RetryPolicy p;
    p.sleeper = [sleeps](int64_t ms) {
        if (sleeps) sleeps->push_back(ms);
    };
    return p;
}

GenerationRequest request_of(const std::string& user_text) {
    GenerationRequest r;
    r.messages = {{Role::system, "sys"}, {Role::user, user_text}};
    return r;
}

} // namespace

TEST_CASE("cosine") {
    CHECK(cosine({{1, 0}}, {{0, 1}}) == Approx(0.0).epsilon(1e-12));
    CHECK(cosine({{3, 4}}, {{3, 4}}) == Approx(1.0).epsilon(1e-9));
    CHECK(cosine({{1, 1}}, {{1, 0}}) == Approx(0.7071067811865475).epsilon(1e-12));
    CHECK(cosine({{1, 2, 3}}, {{-1, -2, -3}}) == Approx(-1.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)cosine({{1, 2}}, {{1, 2, 3}}), DimensionMismatch);
    CHECK_THROWS_AS((void)cosine({{0, 0}}, {{1, 2}}), ZeroVector);
    CHECK_THROWS_AS((void)cosine({{}}, {{}}), DimensionMismatch);
}

TEST_CASE("fingerprint is stable and role/content sensitive") {
    std::vector<ChatMessage> a = {{Role::system, "s"}, {Role::user, "hello"}};
    CHECK(fingerprint(a) == fingerprint(a));
    CHECK(fingerprint(a).size() == 16);
    std::vector<ChatMessage> b = {{Role::system, "s"}, {Role::assistant, "hello"}};
    CHECK(fingerprint(a) != fingerprint(b));
    std::vector<ChatMessage> c = {{Role::system, "s"}, {Role::user, "hello!"}};
    CHECK(fingerprint(a) != fingerprint(c));
}

TEST_CASE("scripted keyed backend replays byte-identically") {
    auto req = request_of("hello");
    std::map<std::string, std::string> responses = {
        {fingerprint(req.messages), "fixture response"}};
    ScriptedGenerationBackend backend(responses);
    CHECK(generate(backend, req, fast_policy()) == "fixture response");
    CHECK(generate(backend, req, fast_policy()) == "fixture response");
    CHECK_THROWS_AS((void)generate(backend, request_of("other"), RetryPolicy::none()),
                    BackendUnavailable);
}

TEST_CASE("scripted queue backend pops in order") {
    ScriptedGenerationBackend backend(std::vector<std::string>{"one", "two"});
    CHECK(backend.remaining_queue() == 2);
    CHECK(generate(backend, request_of("x"), fast_policy()) == "one");
    CHECK(generate(backend, request_of("y"), fast_policy()) == "two");
    CHECK(backend.remaining_queue() == 0);
    CHECK_THROWS_AS((void)generate(backend, request_of("z"), RetryPolicy::none()),
                    BackendUnavailable);
}

TEST_CASE("scripted backend loads fixture files") {
    fs::path dir = fs::temp_directory_path() / "evipath_backends_test";
    fs::remove_all(dir);

    fs::path keyed = dir / "keyed.jsonl";
    util::write_file(keyed, "{\"key\":\"k1\",\"response\":\"r1\"}\n"
                            "{\"key\":\"k2\",\"response\":\"r2\"}\n");
    auto kb = ScriptedGenerationBackend::from_file(keyed);
    GenerationRequest req; // fingerprint of no messages is not k1 -> miss
    CHECK_THROWS_AS((void)kb->generate_once(req), BackendUnavailable);

    fs::path queued = dir / "queue.jsonl";
    util::write_file(queued, "{\"queue\":[\"first\",\"second\"]}\n");
    auto qb = ScriptedGenerationBackend::from_file(queued);
    CHECK(qb->generate_once(req) == "first");
    CHECK(qb->generate_once(req) == "second");
    fs::remove_all(dir);
}

TEST_CASE("generate guards context before any backend call") {
    std::atomic<int> calls{0};
    CallbackGenerationBackend backend(
        [&](const GenerationRequest&) {
            ++calls;
            return std::string("ok");
        },
        0, 16);
    CHECK_THROWS_AS((void)generate(backend, request_of(std::string(64, 'x'))), ContextTooLong);
    CHECK(calls.load() == 0);
    CHECK(generate(backend, request_of("short"), fast_policy()) == "ok");
    CHECK(calls.load() == 1);
}

TEST_CASE("retry: two failures then success within budget 3") {
    std::atomic<int> calls{0};
    CallbackGenerationBackend backend([&](const GenerationRequest&) -> std::string {
        if (++calls <= 2) throw BackendUnavailable("flaky");
        return "recovered";
    });
    std::vector<int64_t> sleeps;
    CHECK(generate(backend, request_of("q"), fast_policy(&sleeps)) == "recovered");
    CHECK(calls.load() == 3);
    REQUIRE(sleeps.size() == 2);
    // backoff 1s then 2s, +-20% jitter
    CHECK(sleeps[0] >= 800);
    CHECK(sleeps[0] <= 1200);
    CHECK(sleeps[1] >= 1600);
    CHECK(sleeps[1] <= 2400);
}

TEST_CASE("retry: budget exhausted surfaces the error after 3 attempts") {
    std::atomic<int> calls{0};
    CallbackGenerationBackend backend([&](const GenerationRequest&) -> std::string {
        ++calls;
        throw BackendUnavailable("down");
    });
    std::vector<int64_t> sleeps;
    CHECK_THROWS_AS((void)generate(backend, request_of("q"), fast_policy(&sleeps)),
                    BackendUnavailable);
    CHECK(calls.load() == 3);
    CHECK(sleeps.size() == 2);
}

TEST_CASE("retry also covers MalformedResponse") {
    std::atomic<int> calls{0};
    CallbackGenerationBackend backend([&](const GenerationRequest&) -> std::string {
        if (++calls == 1) throw MalformedResponse("garbled");
        return "fine";
    });
    CHECK(generate(backend, request_of("q"), fast_policy()) == "fine");
    CHECK(calls.load() == 2);
}

TEST_CASE("embed basics: empty input, duplicates, scripted table") {
    HashedEmbeddingBackend hashed(32);
    CHECK(embed(hashed, {}).empty());

    auto two = embed(hashed, {"a", "a"});
    REQUIRE(two.size() == 2);
    CHECK(two[0] == two[1]);
    CHECK(two[0].dim() == 32);

    std::map<std::string, std::vector<double>> table = {
        {"t1", {1, 0}}, {"t2", {0, 1}}, {"t3", {1, 1}}, {"t4", {0.5, -0.5}}};
    ScriptedEmbeddingBackend scripted(table);
    auto vecs = embed(scripted, {"t3", "t1"});
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0].values == std::vector<double>{1, 1});
    CHECK(vecs[1].values == std::vector<double>{1, 0});
    CHECK_THROWS_AS((void)embed(scripted, {"missing"}, RetryPolicy::none()),
                    BackendUnavailable);
}

TEST_CASE("embed preserves order under permutation") {
    HashedEmbeddingBackend hashed(16);
    std::vector<std::string> texts = {"alpha", "beta", "gamma", "delta"};
    auto base = embed(hashed, texts);
    std::vector<std::string> perm = {"gamma", "alpha", "delta", "beta"};
    auto permuted = embed(hashed, perm);
    CHECK(permuted[0] == base[2]);
    CHECK(permuted[1] == base[0]);
    CHECK(permuted[2] == base[3]);
    CHECK(permuted[3] == base[1]);
}

TEST_CASE("embed validates dimensionality") {
    std::map<std::string, std::vector<double>> ragged = {{"a", {1, 2}}, {"b", {1, 2, 3}}};
    ScriptedEmbeddingBackend scripted(ragged);
    CHECK_THROWS_AS((void)embed(scripted, {"a", "b"}, RetryPolicy::none()),
                    DimensionMismatch);
}

TEST_CASE("hashed embeddings are deterministic and never zero") {
    HashedEmbeddingBackend backend(64);
    auto a1 = backend.embed_once({"some text"});
    auto a2 = backend.embed_once({"some text"});
    CHECK(a1 == a2);
    for (const auto& v : backend.embed_once({"x", "y", "", "長い テキスト"})) {
        double norm = 0;
        for (double x : v.values) norm += x * x;
        CHECK(norm > 0.0);
    }
    // cosine self-similarity is exactly 1 within tolerance
    CHECK(cosine(a1[0], a2[0]) == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("semaphore caps concurrency") {
    Semaphore sem(2);
    std::atomic<int> active{0}, peak{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            sem.acquire();
            int now = ++active;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --active;
            sem.release();
        });
    }
    for (auto& t : threads) t.join();
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("http backends speak the OpenAI-compatible shape") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        std::string last = body["messages"].back()["content"].get<std::string>();
        if (last == "boom") {
            res.status = 500;
            return;
        }
        if (last == "garbled") {
            res.set_content("{\"nope\":true}", "application/json");
            return;
        }
        nlohmann::json out = {
            {"choices",
             {{{"message", {{"role", "assistant"}, {"content", "echo:" + last}}}}}}};
        res.set_content(out.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        // reversed order; the client must restore it via the index field
        for (int i = static_cast<int>(body["input"].size()) - 1; i >= 0; --i)
            data.push_back({{"index", i}, {"embedding", {double(i), 1.0}}});
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "test-model";
    HttpGenerationBackend gen(cfg);
    CHECK(generate(gen, request_of("hi"), fast_policy()) == "echo:hi");
    CHECK_THROWS_AS((void)generate(gen, request_of("boom"), RetryPolicy::none()),
                    BackendUnavailable);
    CHECK_THROWS_AS((void)generate(gen, request_of("garbled"), RetryPolicy::none()),
                    MalformedResponse);

    HttpEmbeddingBackend emb(cfg);
    auto vecs = embed(emb, {"a", "b", "c"}, fast_policy());
    REQUIRE(vecs.size() == 3);
    CHECK(vecs[0].values == std::vector<double>{0.0, 1.0});
    CHECK(vecs[2].values == std::vector<double>{2.0, 1.0});

    server.stop();
    server_thread.join();
}
