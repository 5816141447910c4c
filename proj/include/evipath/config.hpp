#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/tags.hpp"

namespace evipath::config {

// One model endpoint. Generation kinds: "http", "scripted", "mock_qa";
// embedding kinds: "http", "scripted", "hashed".
struct BackendSpec {
    std::string kind;
    std::string url;         // http
    std::string api_key;     // http
    std::string model;       // http
    std::string script_path; // scripted fixture (JSONL)
    size_t dim = 64;         // hashed
    int64_t latency_ms = 0;  // scripted / mock_qa: simulated per-call latency
    bool operator==(const BackendSpec&) const = default;
};

// The single declarative document every subcommand reads. Flags override
// environment variables override file values.
struct RunConfig {
    // data
    std::string dataset_path;
    dataset::Format dataset_format = dataset::Format::canonical;
    std::string out_dir = "out";

    // synthesis
    tags::Dialect dialect = tags::Dialect::plain;
    double tau = 0.9;       // similarity threshold, in (0, 1]
    int max_steps = 8;
    int max_actions_per_step = 4;
    int max_plan_len = 8;
    uint64_t shuffle_seed = 0; // 0 keeps the pool order

    // agent / eval
    std::string eval_mode = "distractor"; // open_domain | distractor | kg
    size_t retrieval_k = 5;
    std::string index_cache;      // embedding cache file (open_domain)
    std::string predictions_path; // cmd_eval input
    std::string golds_path;       // cmd_eval input (defaults to dataset_path)

    // backends + concurrency
    BackendSpec gen{.kind = "mock_qa"};
    BackendSpec emb{.kind = "hashed"};
    int workers = 8;
    double requests_per_second = 0; // 0 = unlimited
    int retry_attempts = 3;

    bool operator==(const RunConfig&) const = default;
};

// Parses the JSON document and validates ranges (ConfigError on violations;
// unknown keys are rejected so typos cannot silently revert to defaults).
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);
std::string dump_config(const RunConfig& config);

// EVIPATH_GEN_URL / EVIPATH_GEN_KEY / EVIPATH_EMB_URL / EVIPATH_EMB_KEY
// override the corresponding file values when set and non-empty.
void apply_env(RunConfig& config);

// Range/value checks shared by parse and the CLI flag layer.
void validate(const RunConfig& config);

backends::RetryPolicy retry_policy(const RunConfig& config);

std::unique_ptr<backends::GenerationBackend> make_generation_backend(const BackendSpec& spec);
std::unique_ptr<backends::EmbeddingBackend> make_embedding_backend(const BackendSpec& spec);

}  // namespace evipath::config
