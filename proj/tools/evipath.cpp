// evipath: synthesize evidence-anchored trajectories, format SFT data, run
// the planner-executor agent, and score predictions. One declarative config
// drives every subcommand; flags override environment variables override the
// file. Exit codes: 0 ok, 1 bad config/input, 2 backend unreachable, 3 empty
// or fully rejected work.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evipath/backends.hpp"
#include "evipath/config.hpp"
#include "evipath/dataset.hpp"
#include "evipath/errors.hpp"
#include "evipath/metrics.hpp"
#include "evipath/pipeline.hpp"
#include "evipath/prompts.hpp"
#include "evipath/runtime.hpp"
#include "evipath/trajectory.hpp"
#include "evipath/util.hpp"

namespace fs = std::filesystem;
using namespace evipath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitBackendDown = 2;
constexpr int kExitNoYield = 3;

// --- structured log ---------------------------------------------------------

// JSONL event stream under the output directory; every stage logs start and
// elapsed milliseconds so throughput can be measured from the artifacts.
class RunLog {
public:
    void open(const fs::path& path) {
        fs::create_directories(path.parent_path());
        out_.open(path, std::ios::app);
    }

    void event(const std::string& stage, nlohmann::ordered_json fields = nlohmann::ordered_json::object()) {
        if (!out_.is_open()) return;
        nlohmann::ordered_json row;
        row["ts_ms"] = util::now_ms();
        row["stage"] = stage;
        for (auto& [key, value] : fields.items()) row[key] = value;
        out_ << row.dump() << "\n";
        out_.flush();
    }

    // Logs "<stage>" with elapsed_ms on destruction.
    class Timer {
    public:
        Timer(RunLog& log, std::string stage) : log_(log), stage_(std::move(stage)), t0_(util::now_ms()) {
            log_.event(stage_ + ".start");
        }
        ~Timer() { finish(nlohmann::ordered_json::object()); }
        void finish(nlohmann::ordered_json fields) {
            if (done_) return;
            done_ = true;
            fields["elapsed_ms"] = util::now_ms() - t0_;
            log_.event(stage_, std::move(fields));
        }

    private:
        RunLog& log_;
        std::string stage_;
        int64_t t0_;
        bool done_ = false;
    };

private:
    std::ofstream out_;
};

// --- config resolution ------------------------------------------------------

// Every value the command line can override; unset fields keep the
// env-or-file value so precedence stays flags > env > file.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::string> dataset, format, out_dir, dialect, eval_mode;
    std::optional<std::string> index_cache, predictions, golds;
    std::optional<double> tau, rps;
    std::optional<int> max_steps, max_actions, max_plan_len, workers, retry_attempts;
    std::optional<uint64_t> shuffle_seed, retrieval_k;
    std::optional<std::string> gen_kind, gen_url, gen_key, gen_model, gen_script;
    std::optional<int64_t> gen_latency;
    std::optional<std::string> emb_kind, emb_url, emb_key, emb_script;
    std::optional<uint64_t> emb_dim;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--dataset", o.dataset, "QA dataset (JSONL)");
    cmd->add_option("--dataset-format", o.format, "canonical|hotpot|musique|wiki2");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--dialect", o.dialect, "plain|entity_anchored");
    cmd->add_option("--tau", o.tau, "evidence similarity threshold, in (0,1]");
    cmd->add_option("--max-steps", o.max_steps, "action turns per episode");
    cmd->add_option("--max-actions", o.max_actions, "Search calls per turn");
    cmd->add_option("--max-plan-len", o.max_plan_len, "plan length cap");
    cmd->add_option("--shuffle-seed", o.shuffle_seed, "fact-pool shuffle seed (0 = keep order)");
    cmd->add_option("--eval-mode", o.eval_mode, "open_domain|distractor|kg");
    cmd->add_option("--retrieval-k", o.retrieval_k, "dense retrieval top-k");
    cmd->add_option("--index-cache", o.index_cache, "embedding index cache file");
    cmd->add_option("--predictions", o.predictions, "predictions JSONL (eval input)");
    cmd->add_option("--golds", o.golds, "gold dataset for eval (defaults to --dataset)");
    cmd->add_option("--workers", o.workers, "worker pool size / in-flight cap");
    cmd->add_option("--rps", o.rps, "backend request rate limit (0 = unlimited)");
    cmd->add_option("--retry-attempts", o.retry_attempts, "backend retry attempts");
    cmd->add_option("--gen-kind", o.gen_kind, "generation backend: http|scripted|mock_qa");
    cmd->add_option("--gen-url", o.gen_url, "generation endpoint URL");
    cmd->add_option("--gen-key", o.gen_key, "generation API key");
    cmd->add_option("--gen-model", o.gen_model, "generation model name");
    cmd->add_option("--gen-script", o.gen_script, "scripted generation fixture (JSONL)");
    cmd->add_option("--gen-latency-ms", o.gen_latency, "simulated latency per generation call");
    cmd->add_option("--emb-kind", o.emb_kind, "embedding backend: http|scripted|hashed");
    cmd->add_option("--emb-url", o.emb_url, "embedding endpoint URL");
    cmd->add_option("--emb-key", o.emb_key, "embedding API key");
    cmd->add_option("--emb-script", o.emb_script, "scripted embedding fixture (JSONL)");
    cmd->add_option("--emb-dim", o.emb_dim, "hashed embedding dimension");
}

config::RunConfig resolve(const Overrides& o) {
    config::RunConfig cfg;
    if (o.config_path) cfg = config::load_config(*o.config_path);
    config::apply_env(cfg);

    if (o.dataset) cfg.dataset_path = *o.dataset;
    if (o.format) {
        auto format = dataset::format_from(*o.format);
        if (!format) throw ConfigError("config: unknown dataset format '" + *o.format + "'");
        cfg.dataset_format = *format;
    }
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.dialect) {
        auto dialect = tags::dialect_from(*o.dialect);
        if (!dialect) throw ConfigError("config: unknown dialect '" + *o.dialect + "'");
        cfg.dialect = *dialect;
    }
    if (o.tau) cfg.tau = *o.tau;
    if (o.max_steps) cfg.max_steps = *o.max_steps;
    if (o.max_actions) cfg.max_actions_per_step = *o.max_actions;
    if (o.max_plan_len) cfg.max_plan_len = *o.max_plan_len;
    if (o.shuffle_seed) cfg.shuffle_seed = *o.shuffle_seed;
    if (o.eval_mode) cfg.eval_mode = *o.eval_mode;
    if (o.retrieval_k) cfg.retrieval_k = size_t(*o.retrieval_k);
    if (o.index_cache) cfg.index_cache = *o.index_cache;
    if (o.predictions) cfg.predictions_path = *o.predictions;
    if (o.golds) cfg.golds_path = *o.golds;
    if (o.workers) cfg.workers = *o.workers;
    if (o.rps) cfg.requests_per_second = *o.rps;
    if (o.retry_attempts) cfg.retry_attempts = *o.retry_attempts;
    if (o.gen_kind) cfg.gen.kind = *o.gen_kind;
    if (o.gen_url) cfg.gen.url = *o.gen_url;
    if (o.gen_key) cfg.gen.api_key = *o.gen_key;
    if (o.gen_model) cfg.gen.model = *o.gen_model;
    if (o.gen_script) cfg.gen.script_path = *o.gen_script;
    if (o.gen_latency) cfg.gen.latency_ms = *o.gen_latency;
    if (o.emb_kind) cfg.emb.kind = *o.emb_kind;
    if (o.emb_url) cfg.emb.url = *o.emb_url;
    if (o.emb_key) cfg.emb.api_key = *o.emb_key;
    if (o.emb_script) cfg.emb.script_path = *o.emb_script;
    if (o.emb_dim) cfg.emb.dim = size_t(*o.emb_dim);

    config::validate(cfg);
    return cfg;
}

// --- shared plumbing --------------------------------------------------------

// HTTP backends get a minimal round-trip before any work is queued; local
// backends (scripted/mock/hashed) cannot be unreachable.
void preflight_generation(backends::GenerationBackend& gen, const config::BackendSpec& spec) {
    if (spec.kind != "http") return;
    backends::GenerationRequest req;
    req.messages = {{backends::Role::user, "ping"}};
    req.max_tokens = 1;
    gen.generate_once(req);
}

void preflight_embedding(backends::EmbeddingBackend& emb, const config::BackendSpec& spec) {
    if (spec.kind != "http") return;
    emb.embed_once({"ping"});
}

std::vector<dataset::QaSample> load_dataset(const config::RunConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("config: dataset_path is required");
    return dataset::load_samples(cfg.dataset_path, cfg.dataset_format);
}

std::vector<fs::path> shard_files(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

runtime::RunLimits run_limits(const config::RunConfig& cfg) {
    runtime::RunLimits limits;
    limits.max_steps = cfg.max_steps;
    limits.max_actions_per_step = cfg.max_actions_per_step;
    limits.retrieval_k = cfg.retrieval_k;
    return limits;
}

// --- subcommands ------------------------------------------------------------

int cmd_synthesize(const config::RunConfig& cfg) {
    RunLog log;
    log.open(fs::path(cfg.out_dir) / "log.jsonl");
    log.event("synthesize.config", {{"workers", cfg.workers}, {"tau", cfg.tau}});

    std::vector<dataset::QaSample> samples;
    {
        RunLog::Timer t(log, "synthesize.load");
        samples = load_dataset(cfg);
        t.finish({{"samples", samples.size()}});
    }
    if (samples.empty()) {
        std::cerr << "no samples in " << cfg.dataset_path << "\n";
        return kExitNoYield;
    }

    auto gen = config::make_generation_backend(cfg.gen);
    auto emb = config::make_embedding_backend(cfg.emb);
    preflight_generation(*gen, cfg.gen);
    preflight_embedding(*emb, cfg.emb);

    pipeline::SynthesisOptions options;
    options.dialect = cfg.dialect;
    options.tau = cfg.tau;
    options.limits = {cfg.max_steps, cfg.max_actions_per_step, cfg.max_plan_len};
    options.shuffle_seed = cfg.shuffle_seed;
    options.workers = cfg.workers;
    options.retry = config::retry_policy(cfg);

    pipeline::SynthesisOutcome outcome;
    {
        RunLog::Timer t(log, "synthesize.run");
        outcome = pipeline::synthesize_dataset(samples, *gen, *emb, prompts::builtin(), options);
        t.finish({{"accepted", outcome.accepted.size()}, {"rejected", outcome.rejected.size()}});
    }

    fs::create_directories(fs::path(cfg.out_dir) / "trajectories");
    fs::path shard = fs::path(cfg.out_dir) / "trajectories" / "shard-000.jsonl";
    trajectory::write_trajectories(shard, outcome.accepted);

    fs::path rejects_path = fs::path(cfg.out_dir) / "rejects.jsonl";
    {
        std::ofstream rejects_out(rejects_path, std::ios::trunc);
        for (const auto& reject : outcome.rejected)
            util::append_jsonl(rejects_out, {{"sample_id", reject.sample_id},
                                             {"stage", reject.stage},
                                             {"reason", reject.reason}});
    }

    std::map<std::string, size_t> by_stage;
    for (const auto& reject : outcome.rejected) ++by_stage[reject.stage];
    std::cout << "accepted " << outcome.accepted.size() << " / " << samples.size()
              << ", rejected " << outcome.rejected.size() << "\n";
    for (const auto& [stage, count] : by_stage)
        std::cout << "  rejected at " << stage << ": " << count << "\n";
    for (const auto& reject : outcome.rejected)
        std::cout << "  " << reject.sample_id << " [" << reject.stage << "] " << reject.reason << "\n";
    std::cout << "trajectories: " << shard.string() << "\n";

    return outcome.accepted.empty() ? kExitNoYield : kExitOk;
}

int cmd_format(const config::RunConfig& cfg) {
    RunLog log;
    log.open(fs::path(cfg.out_dir) / "log.jsonl");

    std::vector<trajectory::Trajectory> trajectories;
    {
        RunLog::Timer t(log, "format.load");
        for (const auto& file : shard_files(fs::path(cfg.out_dir) / "trajectories")) {
            try {
                auto part = trajectory::read_trajectories(file);
                trajectories.insert(trajectories.end(), std::make_move_iterator(part.begin()),
                                    std::make_move_iterator(part.end()));
            } catch (const ParseError& e) {
                std::cerr << file.string() << ":" << e.line << ": " << e.what() << "\n";
                return kExitBadInput;
            } catch (const SchemaError& e) {
                std::cerr << file.string() << ":" << e.line << ": " << e.what() << "\n";
                return kExitBadInput;
            }
        }
        t.finish({{"trajectories", trajectories.size()}});
    }
    if (trajectories.empty()) {
        std::cerr << "no trajectories under " << cfg.out_dir << "/trajectories\n";
        return kExitNoYield;
    }

    auto bundle = pipeline::format_all(trajectories, prompts::builtin());
    size_t total_calls = 0;
    for (const auto& trajectory : trajectories) total_calls += trajectory.records.size();
    if (bundle.planner.size() != trajectories.size() || bundle.executor.size() != total_calls) {
        std::cerr << "formatted record counts do not match the trajectory set\n";
        return kExitBadInput;
    }

    fs::create_directories(fs::path(cfg.out_dir) / "sft");
    trajectory::write_sft(fs::path(cfg.out_dir) / "sft" / "planner.jsonl", bundle.planner);
    trajectory::write_sft(fs::path(cfg.out_dir) / "sft" / "executor.jsonl", bundle.executor);
    log.event("format.write", {{"planner", bundle.planner.size()}, {"executor", bundle.executor.size()}});
    std::cout << "planner records: " << bundle.planner.size()
              << ", executor records: " << bundle.executor.size() << "\n";
    return kExitOk;
}

int cmd_agent(const config::RunConfig& cfg) {
    RunLog log;
    log.open(fs::path(cfg.out_dir) / "log.jsonl");
    log.event("agent.config", {{"eval_mode", cfg.eval_mode}, {"retrieval_k", cfg.retrieval_k}});

    auto samples = load_dataset(cfg);
    if (samples.empty()) {
        std::cerr << "no samples in " << cfg.dataset_path << "\n";
        return kExitNoYield;
    }

    auto gen = config::make_generation_backend(cfg.gen);
    preflight_generation(*gen, cfg.gen);
    auto retry = config::retry_policy(cfg);

    // Mode-specific retrieval state. The embedding backend and corpus index
    // exist only for open_domain; the stores are shared across workers and
    // read-only during the run.
    std::unique_ptr<backends::EmbeddingBackend> emb;
    runtime::CorpusIndex index;
    dataset::Corpus corpus;
    runtime::DistractorStore distractors;
    dataset::TripleStore triples;

    std::function<runtime::Retriever(const dataset::QaSample&)> retriever_for;
    std::function<runtime::AgentConfig(const dataset::QaSample&)> config_for =
        [&](const dataset::QaSample&) {
            runtime::AgentConfig agent;
            agent.limits = run_limits(cfg);
            agent.dialect = cfg.dialect;
            agent.retry = retry;
            return agent;
        };

    if (cfg.eval_mode == "open_domain") {
        emb = config::make_embedding_backend(cfg.emb);
        preflight_embedding(*emb, cfg.emb);
        corpus = dataset::build_corpus(samples);
        RunLog::Timer t(log, "agent.index");
        index = cfg.index_cache.empty()
                    ? runtime::CorpusIndex::build(corpus, *emb, retry)
                    : runtime::CorpusIndex::build_or_load(corpus, *emb, cfg.index_cache, retry);
        t.finish({{"entries", index.size()}, {"dim", index.dim()}});
        retriever_for = [&](const dataset::QaSample&) -> runtime::Retriever {
            return [&](const tags::SearchCall& call, const std::vector<tags::CandidateBinding>&) {
                return runtime::retrieve_dense(index, call.question, cfg.retrieval_k, *emb, retry);
            };
        };
    } else if (cfg.eval_mode == "distractor") {
        distractors = runtime::DistractorStore::from_samples(samples);
        retriever_for = [&](const dataset::QaSample& sample) -> runtime::Retriever {
            return [&distractors, id = sample.sample_id](const tags::SearchCall& call,
                                                         const std::vector<tags::CandidateBinding>&) {
                auto result = runtime::retrieve_distractor(id, distractors);
                result.query = call.question;
                return result;
            };
        };
    } else { // kg
        triples = dataset::build_triple_store(samples);
        retriever_for = [&](const dataset::QaSample&) -> runtime::Retriever {
            return [&](const tags::SearchCall& call, const std::vector<tags::CandidateBinding>& bindings) {
                return runtime::retrieve_triples(triples, call, bindings);
            };
        };
        config_for = [&](const dataset::QaSample& sample) {
            runtime::AgentConfig agent;
            agent.limits = run_limits(cfg);
            agent.dialect = cfg.dialect;
            agent.retry = retry;
            agent.initial_bindings = planner::derive_initial_bindings(sample);
            agent.annotator = runtime::make_triple_annotator(triples);
            return agent;
        };
    }

    pipeline::AgentOutcome outcome;
    {
        RunLog::Timer t(log, "agent.run");
        outcome = pipeline::run_agent_over(samples, *gen, *gen, retriever_for, config_for,
                                           prompts::builtin(), cfg.workers);
        t.finish({{"samples", outcome.rows.size()}});
    }

    fs::create_directories(cfg.out_dir);
    fs::path predictions_path = fs::path(cfg.out_dir) / "predictions.jsonl";
    std::ofstream predictions_out(predictions_path, std::ios::trunc);
    for (const auto& row : outcome.rows)
        util::append_jsonl(predictions_out,
                           {{"sample_id", row.sample_id},
                            {"prediction", row.prediction},
                            {"termination", std::string(runtime::to_string(row.termination))}});
    predictions_out.close();

    fs::path traces_path = fs::path(cfg.out_dir) / "traces.jsonl";
    std::ofstream traces_out(traces_path, std::ios::trunc);
    for (size_t i = 0; i < outcome.traces.size(); ++i) {
        const auto& trace = outcome.traces[i];
        nlohmann::ordered_json row;
        row["sample_id"] = outcome.rows[i].sample_id;
        row["termination"] = std::string(runtime::to_string(trace.termination));
        row["final_answer"] = trace.final_answer ? nlohmann::ordered_json(*trace.final_answer)
                                                 : nlohmann::ordered_json(nullptr);
        auto transcript = nlohmann::ordered_json::array();
        for (const auto& message : trace.transcript)
            transcript.push_back({{"role", std::string(backends::to_string(message.role))},
                                  {"content", message.content}});
        row["transcript"] = std::move(transcript);
        auto retrievals = nlohmann::ordered_json::array();
        for (const auto& retrieval : trace.retrievals) {
            auto items = nlohmann::ordered_json::array();
            for (const auto& item : retrieval.items)
                items.push_back({{"id", item.id}, {"score", item.score}, {"content", item.content}});
            retrievals.push_back(
                {{"query", retrieval.query}, {"k", retrieval.k}, {"items", std::move(items)}});
        }
        row["retrievals"] = std::move(retrievals);
        util::append_jsonl(traces_out, row);
    }
    traces_out.close();

    std::map<std::string, size_t> by_termination;
    for (const auto& row : outcome.rows)
        ++by_termination[std::string(runtime::to_string(row.termination))];
    for (const auto& [name, count] : by_termination)
        std::cout << name << ": " << count << "\n";
    std::cout << "predictions: " << predictions_path.string() << "\n";
    return kExitOk;
}

int cmd_eval(const config::RunConfig& cfg) {
    RunLog log;
    log.open(fs::path(cfg.out_dir) / "log.jsonl");

    fs::path predictions_path = cfg.predictions_path.empty()
                                    ? fs::path(cfg.out_dir) / "predictions.jsonl"
                                    : fs::path(cfg.predictions_path);
    std::vector<metrics::Prediction> predictions;
    util::for_each_jsonl(predictions_path, [&](size_t line, const nlohmann::ordered_json& row) {
        if (!row.is_object() || !row.contains("sample_id") || !row.contains("prediction"))
            throw SchemaError(line, "prediction",
                              predictions_path.string() + ": rows need sample_id and prediction");
        metrics::Prediction p;
        p.sample_id = row.at("sample_id").get<std::string>();
        p.text = row.at("prediction").get<std::string>();
        if (row.contains("termination")) p.termination = row.at("termination").get<std::string>();
        predictions.push_back(std::move(p));
    });

    std::string golds_path = cfg.golds_path.empty() ? cfg.dataset_path : cfg.golds_path;
    if (golds_path.empty()) throw ConfigError("config: golds_path or dataset_path is required");
    auto gold_samples = dataset::load_samples(golds_path, cfg.dataset_format);
    std::vector<std::pair<std::string, std::string>> golds;
    golds.reserve(gold_samples.size());
    for (const auto& sample : gold_samples) golds.emplace_back(sample.sample_id, sample.answer);

    auto report = metrics::evaluate(predictions, golds);
    fs::create_directories(cfg.out_dir);
    util::write_file(fs::path(cfg.out_dir) / "report.json", metrics::report_to_json(report).dump(2) + "\n");
    std::cout << metrics::report_to_table(report);
    log.event("eval", {{"n", report.n}, {"em", report.em}, {"f1", report.f1}});
    return kExitOk;
}

int cmd_validate(const config::RunConfig& cfg) {
    size_t checked_samples = 0, checked_trajectories = 0;
    std::vector<std::string> violations;

    if (!cfg.dataset_path.empty()) {
        try {
            auto samples = dataset::load_samples(cfg.dataset_path, cfg.dataset_format);
            checked_samples = samples.size();
            for (const auto& sample : samples)
                for (const auto& violation : dataset::validate_sample(sample))
                    violations.push_back(sample.sample_id + ": " + violation);
        } catch (const ParseError& e) {
            std::cerr << cfg.dataset_path << ":" << e.line << ": " << e.what() << "\n";
            return kExitBadInput;
        } catch (const SchemaError& e) {
            violations.push_back(cfg.dataset_path + ":" + std::to_string(e.line) + " [" + e.field +
                                 "] " + e.what());
        }
    }

    for (const auto& file : shard_files(fs::path(cfg.out_dir) / "trajectories")) {
        try {
            checked_trajectories += trajectory::read_trajectories(file).size();
        } catch (const ParseError& e) {
            std::cerr << file.string() << ":" << e.line << ": " << e.what() << "\n";
            return kExitBadInput;
        } catch (const SchemaError& e) {
            violations.push_back(file.string() + ":" + std::to_string(e.line) + " " + e.what());
        }
    }

    std::cout << "samples checked: " << checked_samples
              << ", trajectories checked: " << checked_trajectories
              << ", violations: " << violations.size() << "\n";
    for (const auto& violation : violations) std::cout << "  " << violation << "\n";
    return violations.empty() ? kExitOk : kExitNoYield;
}

int dispatch(const std::string& name, const Overrides& overrides) {
    try {
        auto cfg = resolve(overrides);
        if (name == "synthesize") return cmd_synthesize(cfg);
        if (name == "format") return cmd_format(cfg);
        if (name == "agent") return cmd_agent(cfg);
        if (name == "eval") return cmd_eval(cfg);
        return cmd_validate(cfg);
    } catch (const BackendUnavailable& e) {
        std::cerr << "backend unreachable: " << e.what() << "\n";
        return kExitBackendDown;
    } catch (const ParseError& e) {
        std::cerr << "error (line " << e.line << "): " << e.what() << "\n";
        return kExitBadInput;
    } catch (const SchemaError& e) {
        std::cerr << "error (line " << e.line << ", " << e.field << "): " << e.what() << "\n";
        return kExitBadInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evidence-anchored trajectory synthesis and agent evaluation"};
    app.require_subcommand(1);

    Overrides overrides;
    std::string chosen;
    for (const char* name : {"synthesize", "format", "agent", "eval", "validate"}) {
        CLI::App* cmd = app.add_subcommand(
            name, std::string(name == std::string("synthesize") ? "synthesize trajectories from a QA dataset"
                  : name == std::string("format")               ? "format trajectories into SFT conversations"
                  : name == std::string("agent")                ? "run the planner-executor agent over a split"
                  : name == std::string("eval")                 ? "score predictions against gold answers"
                                                                : "lint datasets and stored trajectories"));
        add_common_flags(cmd, overrides);
        cmd->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);
    return dispatch(chosen, overrides);
}
