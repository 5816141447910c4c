#include "evipath/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "evipath/errors.hpp"
#include "evipath/pipeline.hpp"
#include "evipath/prompts.hpp"
#include "evipath/util.hpp"

namespace evipath::config {

namespace {

using nlohmann::ordered_json;

const std::set<std::string> kGenKinds = {"http", "scripted", "mock_qa"};
const std::set<std::string> kEmbKinds = {"http", "scripted", "hashed"};

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

BackendSpec backend_from(const ordered_json& doc, const std::string& which) {
    if (!doc.is_object()) fail("'" + which + "' must be an object");
    BackendSpec spec;
    spec.kind = which == "gen" ? "mock_qa" : "hashed";
    for (const auto& [key, value] : doc.items()) {
        if (key == "kind") spec.kind = value.get<std::string>();
        else if (key == "url") spec.url = value.get<std::string>();
        else if (key == "api_key") spec.api_key = value.get<std::string>();
        else if (key == "model") spec.model = value.get<std::string>();
        else if (key == "script_path") spec.script_path = value.get<std::string>();
        else if (key == "dim") spec.dim = value.get<size_t>();
        else if (key == "latency_ms") spec.latency_ms = value.get<int64_t>();
        else fail("unknown key '" + which + "." + key + "'");
    }
    return spec;
}

ordered_json backend_to(const BackendSpec& spec) {
    return ordered_json{{"kind", spec.kind},         {"url", spec.url},
                        {"api_key", spec.api_key},   {"model", spec.model},
                        {"script_path", spec.script_path}, {"dim", spec.dim},
                        {"latency_ms", spec.latency_ms}};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    ordered_json doc = ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded()) fail("not valid JSON");
    if (!doc.is_object()) fail("top level must be an object");

    RunConfig cfg;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "dataset_path") cfg.dataset_path = value.get<std::string>();
            else if (key == "dataset_format") {
                auto format = dataset::format_from(value.get<std::string>());
                if (!format) fail("unknown dataset_format '" + value.get<std::string>() + "'");
                cfg.dataset_format = *format;
            } else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
            else if (key == "dialect") {
                auto dialect = tags::dialect_from(value.get<std::string>());
                if (!dialect) fail("unknown dialect '" + value.get<std::string>() + "'");
                cfg.dialect = *dialect;
            } else if (key == "tau") cfg.tau = value.get<double>();
            else if (key == "max_steps") cfg.max_steps = value.get<int>();
            else if (key == "max_actions_per_step") cfg.max_actions_per_step = value.get<int>();
            else if (key == "max_plan_len") cfg.max_plan_len = value.get<int>();
            else if (key == "shuffle_seed") cfg.shuffle_seed = value.get<uint64_t>();
            else if (key == "eval_mode") cfg.eval_mode = value.get<std::string>();
            else if (key == "retrieval_k") cfg.retrieval_k = value.get<size_t>();
            else if (key == "index_cache") cfg.index_cache = value.get<std::string>();
            else if (key == "predictions_path") cfg.predictions_path = value.get<std::string>();
            else if (key == "golds_path") cfg.golds_path = value.get<std::string>();
            else if (key == "gen") cfg.gen = backend_from(value, "gen");
            else if (key == "emb") cfg.emb = backend_from(value, "emb");
            else if (key == "workers") cfg.workers = value.get<int>();
            else if (key == "requests_per_second") cfg.requests_per_second = value.get<double>();
            else if (key == "retry_attempts") cfg.retry_attempts = value.get<int>();
            else fail("unknown key '" + key + "'");
        }
    } catch (const ordered_json::exception& e) {
        fail(e.what());
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(util::read_file(path));
}

std::string dump_config(const RunConfig& cfg) {
    ordered_json doc{{"dataset_path", cfg.dataset_path},
                     {"dataset_format", std::string(dataset::to_string(cfg.dataset_format))},
                     {"out_dir", cfg.out_dir},
                     {"dialect", std::string(tags::to_string(cfg.dialect))},
                     {"tau", cfg.tau},
                     {"max_steps", cfg.max_steps},
                     {"max_actions_per_step", cfg.max_actions_per_step},
                     {"max_plan_len", cfg.max_plan_len},
                     {"shuffle_seed", cfg.shuffle_seed},
                     {"eval_mode", cfg.eval_mode},
                     {"retrieval_k", cfg.retrieval_k},
                     {"index_cache", cfg.index_cache},
                     {"predictions_path", cfg.predictions_path},
                     {"golds_path", cfg.golds_path},
                     {"gen", backend_to(cfg.gen)},
                     {"emb", backend_to(cfg.emb)},
                     {"workers", cfg.workers},
                     {"requests_per_second", cfg.requests_per_second},
                     {"retry_attempts", cfg.retry_attempts}};
    return doc.dump(2) + "\n";
}

void apply_env(RunConfig& cfg) {
    auto overlay = [](const char* name, std::string& target) {
        const char* value = std::getenv(name);
        if (value && *value) target = value;
    };
    overlay("EVIPATH_GEN_URL", cfg.gen.url);
    overlay("EVIPATH_GEN_KEY", cfg.gen.api_key);
    overlay("EVIPATH_EMB_URL", cfg.emb.url);
    overlay("EVIPATH_EMB_KEY", cfg.emb.api_key);
}

void validate(const RunConfig& cfg) {
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) fail("tau must be in (0, 1]");
    if (cfg.max_steps < 1) fail("max_steps must be positive");
    if (cfg.max_actions_per_step < 1) fail("max_actions_per_step must be positive");
    if (cfg.max_plan_len < 1) fail("max_plan_len must be positive");
    if (cfg.retrieval_k < 1) fail("retrieval_k must be positive");
    if (cfg.workers < 1) fail("workers must be positive");
    if (cfg.retry_attempts < 1) fail("retry_attempts must be positive");
    if (cfg.requests_per_second < 0) fail("requests_per_second must be >= 0");
    if (cfg.eval_mode != "open_domain" && cfg.eval_mode != "distractor" && cfg.eval_mode != "kg")
        fail("eval_mode must be open_domain, distractor or kg");
    if (!kGenKinds.count(cfg.gen.kind)) fail("unknown gen backend kind '" + cfg.gen.kind + "'");
    if (!kEmbKinds.count(cfg.emb.kind)) fail("unknown emb backend kind '" + cfg.emb.kind + "'");
    if (cfg.emb.kind == "hashed" && cfg.emb.dim == 0) fail("emb.dim must be positive");
}

backends::RetryPolicy retry_policy(const RunConfig& cfg) {
    backends::RetryPolicy policy;
    policy.attempts = cfg.retry_attempts;
    return policy;
}

std::unique_ptr<backends::GenerationBackend> make_generation_backend(const BackendSpec& spec) {
    if (spec.kind == "http") {
        if (spec.url.empty()) fail("gen backend: http kind needs a url");
        backends::HttpConfig http;
        http.base_url = spec.url;
        http.api_key = spec.api_key;
        http.model = spec.model;
        return std::make_unique<backends::HttpGenerationBackend>(std::move(http));
    }
    if (spec.kind == "scripted") {
        if (spec.script_path.empty()) fail("gen backend: scripted kind needs a script_path");
        return backends::ScriptedGenerationBackend::from_file(spec.script_path, spec.latency_ms);
    }
    if (spec.kind == "mock_qa")
        return pipeline::make_mock_qa_backend(prompts::builtin(), spec.latency_ms);
    fail("unknown gen backend kind '" + spec.kind + "'");
}

std::unique_ptr<backends::EmbeddingBackend> make_embedding_backend(const BackendSpec& spec) {
    if (spec.kind == "http") {
        if (spec.url.empty()) fail("emb backend: http kind needs a url");
        backends::HttpConfig http;
        http.base_url = spec.url;
        http.api_key = spec.api_key;
        http.model = spec.model;
        return std::make_unique<backends::HttpEmbeddingBackend>(std::move(http));
    }
    if (spec.kind == "scripted") {
        if (spec.script_path.empty()) fail("emb backend: scripted kind needs a script_path");
        std::map<std::string, std::vector<double>> table;
        util::for_each_jsonl(spec.script_path, [&](size_t line, const ordered_json& doc) {
            if (!doc.contains("text") || !doc.contains("embedding"))
                throw SchemaError(line, "text", "embedding fixture rows need \"text\" and \"embedding\"");
            table[doc.at("text").get<std::string>()] =
                doc.at("embedding").get<std::vector<double>>();
        });
        return std::make_unique<backends::ScriptedEmbeddingBackend>(std::move(table));
    }
    if (spec.kind == "hashed") return std::make_unique<backends::HashedEmbeddingBackend>(spec.dim);
    fail("unknown emb backend kind '" + spec.kind + "'");
}

}  // namespace evipath::config
