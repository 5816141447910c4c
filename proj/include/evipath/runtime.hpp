#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/prompts.hpp"
#include "evipath/tags.hpp"

namespace evipath::runtime {

struct RetrievedItem {
  std::string id;      // doc id or triple id
  double score = 0.0;
  std::string content; // presentation-ready text handed to the executor
  bool operator==(const RetrievedItem&) const = default;
};

struct RetrievalResult {
  std::string query;
  std::vector<RetrievedItem> items; // ranked; |items| <= k, scores non-increasing
  size_t k = 0;                     // requested depth
};

struct RunLimits {
  int max_steps = 8;            // action turns per episode
  int max_actions_per_step = 4; // Search calls per turn
  size_t retrieval_k = 5;
  int max_tokens = 1024;
  double temperature = 0.0;
};

enum class Termination { answered, step_budget, protocol_failure };

std::string_view to_string(Termination t);
std::optional<Termination> termination_from(std::string_view name);

// One full inference episode. `transcript` holds the assistant turns and the
// observation user turns (the system prompt and the opening question are
// reproducible from the config, so they are not duplicated here).
struct AnswerTrace {
  std::string question;
  std::vector<backends::ChatMessage> transcript;
  std::vector<RetrievalResult> retrievals; // one per Search call, in issue order
  std::optional<std::string> final_answer; // present iff termination == answered
  Termination termination = Termination::protocol_failure;
};

// Dense index over a corpus: one embedding row per entry, stored as 32-bit
// floats so the on-disk cache and the in-memory scores agree exactly.
class CorpusIndex {
public:
    CorpusIndex() = default;

    static CorpusIndex build(const dataset::Corpus& corpus, backends::EmbeddingBackend& emb,
                             const backends::RetryPolicy& retry = {});
    // Reuses `cache_path` when its digest matches this corpus + backend;
    // otherwise rebuilds and rewrites the cache atomically (write to a temp
    // file, then rename), so concurrent readers never see a partial file.
    static CorpusIndex build_or_load(const dataset::Corpus& corpus,
                                     backends::EmbeddingBackend& emb,
                                     const std::filesystem::path& cache_path,
                                     const backends::RetryPolicy& retry = {});

    // Returns nothing when the file is absent, malformed, or stale.
    static std::optional<CorpusIndex> load(const std::filesystem::path& path,
                                           const dataset::Corpus& corpus,
                                           std::string_view backend_id);
    void save(const std::filesystem::path& path) const;

    static uint64_t expected_digest(const dataset::Corpus& corpus, std::string_view backend_id);

    bool built() const { return built_; }
    size_t size() const { return entries_.size(); }
    size_t dim() const { return dim_; }
    const std::vector<dataset::CorpusEntry>& entries() const { return entries_; }
    std::span<const float> row(size_t i) const;
    uint64_t digest() const { return digest_; }

private:
    bool built_ = false;
    std::vector<dataset::CorpusEntry> entries_;
    size_t dim_ = 0;
    uint64_t digest_ = 0;
    std::vector<float> rows_; // row-major, size() x dim()
};

// Top-k by cosine between the query embedding and the index rows; ties break
// by doc id (ascending), zero-norm rows sink with score -1. IndexMissing on
// an unbuilt index, DimensionMismatch if the query dim differs.
RetrievalResult retrieve_dense(const CorpusIndex& index, const std::string& query, size_t k,
                               backends::EmbeddingBackend& emb,
                               const backends::RetryPolicy& retry = {});

// Distractor setting: every query is answered with the sample's own fact
// pool, verbatim order, unit scores.
struct DistractorStore {
    std::map<std::string, std::vector<dataset::SupportingFact>> facts_by_sample;
    static DistractorStore from_samples(const std::vector<dataset::QaSample>& samples);
};

RetrievalResult retrieve_distractor(const std::string& sample_id, const DistractorStore& store);

// All triples whose subject matches the call's entity (via [k] binding or
// surface name; exact, then case-insensitive, then base-name prefix), rendered
// "(s, r, o)". A resolvable name with no triples yields empty items; a
// dangling [k] or an entity-less call raises UnresolvedEntity.
RetrievalResult retrieve_triples(const dataset::TripleStore& store, const tags::SearchCall& call,
                                 const std::vector<tags::CandidateBinding>& bindings);

using Retriever = std::function<RetrievalResult(const tags::SearchCall&,
                                                const std::vector<tags::CandidateBinding>&)>;

// Appends "Candidate: [k] Subject" annotations for store subjects newly
// mentioned in an observation sentence, extending the binding list (the
// inference-time counterpart of the synthesis annotator).
using Annotator = std::function<std::string(const std::string&,
                                            std::vector<tags::CandidateBinding>&)>;

Annotator make_triple_annotator(const dataset::TripleStore& store);

struct AgentConfig {
    RunLimits limits;
    tags::Dialect dialect = tags::Dialect::plain;
    std::vector<tags::CandidateBinding> initial_bindings; // entity dialect seed
    Annotator annotator;                                  // optional
    backends::RetryPolicy retry;
};

// The deployed planner-executor loop: parse a planner turn (lenient), retrieve
// per Search call, let the executor answer over the retrieved items (or "No
// relevant information found." when retrieval comes back empty), feed the
// joined sentences back as the observation, and stop on a final answer or the
// step budget. Never throws: malformed planner output (three failed attempts
// per turn) or any backend/retriever error ends the trace as
// protocol_failure. Retrieval count always equals Search-call count.
AnswerTrace run_agent(const std::string& question, backends::GenerationBackend& planner_backend,
                      backends::GenerationBackend& executor_backend, const Retriever& retriever,
                      const prompts::PromptSet& prompt_set = prompts::builtin(),
                      const AgentConfig& config = {});

}  // namespace evipath::runtime
