#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/planner.hpp"
#include "evipath/prompts.hpp"
#include "evipath/runtime.hpp"
#include "evipath/trajectory.hpp"

namespace evipath::pipeline {

struct SynthesisOptions {
    tags::Dialect dialect = tags::Dialect::plain;
    double tau = 0.9; // evidence-selection threshold
    planner::EpisodeLimits limits;
    // 0 keeps the pool order; otherwise each sample's fact pool is shuffled
    // with a per-sample seed (so distractor positions vary but runs stay
    // reproducible).
    uint64_t shuffle_seed = 0;
    int workers = 8;
    backends::RetryPolicy retry;
    int content_retries = 3;
};

struct Reject {
    std::string sample_id;
    std::string stage; // "synthesis" or "validation"
    std::string reason;
};

// accepted/rejected partition the input: accepted.size() + rejected.size()
// equals the sample count, both in input order.
struct SynthesisOutcome {
    std::vector<trajectory::Trajectory> accepted;
    std::vector<Reject> rejected;
};

// One sample end to end: planner episode with the executor stack as the step
// oracle (sub-answer from golden evidence, similarity selection, grounded
// chain-of-thought), then cross-validation of the assembled trajectory.
trajectory::Trajectory synthesize_sample(const dataset::QaSample& sample,
                                         backends::GenerationBackend& gen,
                                         backends::EmbeddingBackend& emb,
                                         const prompts::PromptSet& prompt_set,
                                         const SynthesisOptions& options = {});

// Worker pool over samples; results keep input order regardless of
// completion order, so shard contents are deterministic.
SynthesisOutcome synthesize_dataset(const std::vector<dataset::QaSample>& samples,
                                    backends::GenerationBackend& gen,
                                    backends::EmbeddingBackend& emb,
                                    const prompts::PromptSet& prompt_set,
                                    const SynthesisOptions& options = {});

struct SftBundle {
    std::vector<trajectory::SftRecord> planner;  // one per trajectory
    std::vector<trajectory::SftRecord> executor; // one per Search call
};

SftBundle format_all(const std::vector<trajectory::Trajectory>& trajectories,
                     const prompts::PromptSet& prompt_set);

struct AgentRow {
    std::string sample_id;
    std::string prediction; // empty when the episode produced no final answer
    runtime::Termination termination = runtime::Termination::protocol_failure;
};

struct AgentOutcome {
    std::vector<AgentRow> rows;               // input order
    std::vector<runtime::AnswerTrace> traces; // input order
};

// Evaluates every sample with run_agent; the two hooks supply the per-sample
// retriever and agent configuration (dialect, bindings, annotator).
AgentOutcome run_agent_over(
    const std::vector<dataset::QaSample>& samples, backends::GenerationBackend& planner_backend,
    backends::GenerationBackend& executor_backend,
    const std::function<runtime::Retriever(const dataset::QaSample&)>& retriever_for,
    const std::function<runtime::AgentConfig(const dataset::QaSample&)>& config_for,
    const prompts::PromptSet& prompt_set, int workers = 8);

// Deterministic stand-in for a served model, recognizing this project's
// prompts: it plans one lookup per question, echoes golden evidence in the
// synthesis roles, and answers "... founded in <year>" lookups at inference.
// Intended for fixtures, throughput tests and offline demos (plain dialect).
std::unique_ptr<backends::GenerationBackend> make_mock_qa_backend(
    const prompts::PromptSet& prompt_set, int64_t latency_ms = 0);

}  // namespace evipath::pipeline
