#include "evipath/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <optional>
#include <random>
#include <thread>

#include "evipath/errors.hpp"
#include "evipath/executor.hpp"
#include "evipath/util.hpp"

namespace evipath::pipeline {

namespace {

using backends::GenerationRequest;

std::string first_line_with(const std::string& text, std::string_view prefix) {
    for (std::string_view line : util::split_lines(text))
        if (util::starts_with(line, prefix)) return std::string(line.substr(prefix.size()));
    return "";
}

// Runs `fn(i)` for i in [0, n) on a small pool; index handout is atomic so
// slots are written exactly once, in whatever order workers finish.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    size_t pool_size = size_t(std::max(1, workers));
    pool_size = std::min(pool_size, n);
    std::atomic<size_t> next{0};
    auto drain = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    if (pool_size == 1) {
        drain();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (size_t w = 0; w < pool_size; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
}

}  // namespace

trajectory::Trajectory synthesize_sample(const dataset::QaSample& sample,
                                         backends::GenerationBackend& gen,
                                         backends::EmbeddingBackend& emb,
                                         const prompts::PromptSet& prompt_set,
                                         const SynthesisOptions& options) {
    dataset::QaSample working = sample;
    if (options.shuffle_seed != 0) {
        std::mt19937_64 rng(options.shuffle_seed ^ util::fnv1a64(sample.sample_id));
        std::shuffle(working.facts.begin(), working.facts.end(), rng);
    }
    std::vector<dataset::SupportingFact> golden;
    for (const auto& fact : working.facts)
        if (working.is_golden(fact.id)) golden.push_back(fact);

    std::vector<executor::ExecutorRecord> records;
    planner::StepOracle oracle = [&](const tags::SearchCall& call) {
        std::string sentence = executor::answer_subquestion(
            call.question, golden, gen, prompt_set, options.retry, options.content_retries);
        executor::EvidenceSelection selection =
            executor::select_evidence(sentence, golden, options.tau, emb, options.retry);
        executor::ExecutorRecord record =
            executor::synth_cot(call.question, selection, working.facts, gen, prompt_set,
                                options.retry, options.content_retries);
        std::string answer = record.selection.answer_sentence;
        records.push_back(std::move(record));
        return answer;
    };

    planner::PlannerPath path =
        planner::run_episode(working, options.dialect, gen, oracle, prompt_set, options.limits,
                             options.retry, options.content_retries);
    return trajectory::assemble(working, options.dialect, path, std::move(records));
}

SynthesisOutcome synthesize_dataset(const std::vector<dataset::QaSample>& samples,
                                    backends::GenerationBackend& gen,
                                    backends::EmbeddingBackend& emb,
                                    const prompts::PromptSet& prompt_set,
                                    const SynthesisOptions& options) {
    const size_t n = samples.size();
    std::vector<std::optional<trajectory::Trajectory>> ok(n);
    std::vector<std::optional<Reject>> bad(n);

    parallel_for(n, options.workers, [&](size_t i) {
        const auto& sample = samples[i];
        auto reject = [&](const char* stage, const std::exception& e) {
            bad[i] = Reject{sample.sample_id, stage, e.what()};
        };
        try {
            ok[i] = synthesize_sample(sample, gen, emb, prompt_set, options);
        } catch (const CountMismatch& e) {
            reject("validation", e);
        } catch (const AnswerMismatch& e) {
            reject("validation", e);
        } catch (const CitationError& e) {
            reject("validation", e);
        } catch (const ObservationMismatch& e) {
            reject("validation", e);
        } catch (const Error& e) {
            reject("synthesis", e);
        }
    });

    SynthesisOutcome outcome;
    for (size_t i = 0; i < n; ++i) {
        if (ok[i]) outcome.accepted.push_back(std::move(*ok[i]));
        else outcome.rejected.push_back(std::move(*bad[i]));
    }
    return outcome;
}

SftBundle format_all(const std::vector<trajectory::Trajectory>& trajectories,
                     const prompts::PromptSet& prompt_set) {
    SftBundle bundle;
    for (const auto& traj : trajectories) {
        bundle.planner.push_back(trajectory::format_planner(traj, prompt_set));
        for (auto& record : trajectory::format_executor(traj, prompt_set))
            bundle.executor.push_back(std::move(record));
    }
    return bundle;
}

AgentOutcome run_agent_over(
    const std::vector<dataset::QaSample>& samples, backends::GenerationBackend& planner_backend,
    backends::GenerationBackend& executor_backend,
    const std::function<runtime::Retriever(const dataset::QaSample&)>& retriever_for,
    const std::function<runtime::AgentConfig(const dataset::QaSample&)>& config_for,
    const prompts::PromptSet& prompt_set, int workers) {
    AgentOutcome outcome;
    outcome.rows.resize(samples.size());
    outcome.traces.resize(samples.size());
    parallel_for(samples.size(), workers, [&](size_t i) {
        const auto& sample = samples[i];
        runtime::Retriever retriever = retriever_for(sample);
        runtime::AgentConfig config = config_for(sample);
        runtime::AnswerTrace trace = runtime::run_agent(
            sample.question, planner_backend, executor_backend, retriever, prompt_set, config);
        outcome.rows[i] = {sample.sample_id, trace.final_answer.value_or(""), trace.termination};
        outcome.traces[i] = std::move(trace);
    });
    return outcome;
}

std::unique_ptr<backends::GenerationBackend> make_mock_qa_backend(
    const prompts::PromptSet& prompt_set, int64_t latency_ms) {
    // Captured by value: the backend must not dangle if the caller's set dies.
    prompts::PromptSet set = prompt_set;
    auto fn = [set = std::move(set)](const GenerationRequest& req) -> std::string {
        if (req.messages.size() < 2)
            throw MalformedResponse("mock backend: request carries no user turn");
        const std::string& system = req.messages.front().content;
        const std::string& last = req.messages.back().content;

        if (system == set.planner_synthesis_plain || system == set.planner_synthesis_entity) {
            const std::string& block = req.messages.at(1).content;
            std::string question = first_line_with(block, "Question: ");
            if (req.messages.size() == 2)
                return "<think>\n1. " + question +
                       "\nI will look this up.\n</think>\n<action> Search(\"" + question +
                       "\") </action>";
            std::string answer = first_line_with(block, "Answer: ");
            return "<think>\nThe observation gives the answer.\n</think>\n<answer> " + answer +
                   " </answer>";
        }

        if (system == set.subanswer_synthesis) {
            auto lines = util::split_lines(last);
            for (size_t i = 0; i + 1 < lines.size(); ++i)
                if (lines[i] == "Supporting evidence:")
                    return "<answer> " + std::string(lines[i + 1]) + " </answer>";
            throw MalformedResponse("mock backend: no evidence block in sub-answer prompt");
        }

        if (system == set.executor_synthesis) {
            std::string golden = first_line_with(last, "Golden evidence: ");
            std::string answer = first_line_with(last, "Answer: ");
            std::string select;
            for (size_t i = 0; i < golden.size(); ++i) {
                if (golden[i] != '[') continue;
                size_t close = golden.find(']', i);
                if (close == std::string::npos) break;
                std::string digits = golden.substr(i + 1, close - i - 1);
                bool numeric = !digits.empty() &&
                               std::all_of(digits.begin(), digits.end(), [](unsigned char c) {
                                   return std::isdigit(c);
                               });
                if (numeric) {
                    if (!select.empty()) select += ", ";
                    select += "[" + digits + "]";
                }
                i = close;
            }
            return "<think> The cited evidence answers the question. </think>\n<select> " +
                   select + " </select>\n<answer> " + answer + " </answer>";
        }

        if (system == set.planner_train_plain || system == set.planner_train_entity) {
            std::string question = first_line_with(req.messages.at(1).content, "Question: ");
            if (req.messages.size() > 2 && last.find("founded in") != std::string::npos) {
                // The answer is the last digit run in the observation.
                std::string year, current;
                for (char c : last) {
                    if (std::isdigit(static_cast<unsigned char>(c))) {
                        current += c;
                    } else if (!current.empty()) {
                        year = current;
                        current.clear();
                    }
                }
                if (!current.empty()) year = current;
                return "<think>\nFound it.\n</think>\n<answer> " + year + " </answer>";
            }
            return "<think>\nI need to look this up.\n</think>\n<action> Search(\"" + question +
                   "\") </action>";
        }

        if (system == set.executor_train) {
            std::string question = first_line_with(last, "Question: ");
            std::string subject;
            if (util::starts_with(question, "When was ")) {
                size_t tail = question.rfind(" founded?");
                if (tail != std::string::npos && tail > 9) subject = question.substr(9, tail - 9);
            }
            std::optional<int> pick;
            std::string content;
            for (std::string_view line : util::split_lines(last)) {
                if (line.empty() || line.front() != '[') continue;
                size_t close = line.find("] ");
                if (close == std::string::npos) continue;
                std::string digits(line.substr(1, close - 1));
                if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) {
                        return std::isdigit(c);
                    }))
                    continue;
                std::string body(line.substr(close + 2));
                if (body.find("founded in") == std::string::npos) continue;
                // With a recognizable subject, only its own sentence counts.
                if (!subject.empty() && body.find(subject + " was founded") == std::string::npos)
                    continue;
                pick = std::stoi(digits);
                content = body;
                break;
            }
            if (!pick) return std::string(tags::kNoInfoLine);
            return "<think> The evidence states the founding year. </think>\n<select> [" +
                   std::to_string(*pick) + "] </select>\n<answer> " + content + " </answer>";
        }

        throw MalformedResponse("mock backend: unrecognized system prompt");
    };
    return std::make_unique<backends::CallbackGenerationBackend>(std::move(fn), latency_ms);
}

}  // namespace evipath::pipeline
