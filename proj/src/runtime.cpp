#include "evipath/runtime.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "evipath/errors.hpp"
#include "evipath/planner.hpp"
#include "evipath/trajectory.hpp"
#include "evipath/util.hpp"

namespace evipath::runtime {

namespace {

using backends::ChatMessage;
using backends::GenerationRequest;
using backends::Role;

constexpr char kCacheMagic[8] = {'E', 'V', 'P', 'C', 'A', 'C', 'H', 'E'};
constexpr uint32_t kCacheVersion = 1;

std::string lower_ascii(std::string_view s) { return util::to_lower_ascii(std::string(s)); }

// "Xawery Żuławski (director)" -> "Xawery Żuławski"; plain names pass through.
std::string base_name(const std::string& subject) {
    size_t pos = subject.find(" (");
    return pos == std::string::npos ? subject : subject.substr(0, pos);
}

size_t ci_find(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return std::string::npos;
    return lower_ascii(haystack).find(lower_ascii(needle));
}

std::string entry_presentation(const dataset::CorpusEntry& entry) {
    return entry.title.empty() ? entry.text : entry.title + ": " + entry.text;
}

template <typename T>
void write_pod(std::ofstream& os, const T& value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& is, T& value) {
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    return bool(is);
}

}  // namespace

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::answered: return "answered";
        case Termination::step_budget: return "step_budget";
        case Termination::protocol_failure: return "protocol_failure";
    }
    return "protocol_failure";
}

std::optional<Termination> termination_from(std::string_view name) {
    if (name == "answered") return Termination::answered;
    if (name == "step_budget") return Termination::step_budget;
    if (name == "protocol_failure") return Termination::protocol_failure;
    return std::nullopt;
}

uint64_t CorpusIndex::expected_digest(const dataset::Corpus& corpus, std::string_view backend_id) {
    uint64_t h = util::fnv1a64(backend_id);
    for (const auto& entry : corpus.entries) {
        h = util::fnv1a64(entry.doc_id, h);
        h = util::fnv1a64("\x1f", h);
        h = util::fnv1a64(entry.title, h);
        h = util::fnv1a64("\x1f", h);
        h = util::fnv1a64(entry.text, h);
        h = util::fnv1a64("\n", h);
    }
    return h;
}

std::span<const float> CorpusIndex::row(size_t i) const {
    return std::span<const float>(rows_.data() + i * dim_, dim_);
}

CorpusIndex CorpusIndex::build(const dataset::Corpus& corpus, backends::EmbeddingBackend& emb,
                               const backends::RetryPolicy& retry) {
    std::vector<std::string> texts;
    texts.reserve(corpus.entries.size());
    for (const auto& entry : corpus.entries) texts.push_back(entry.text);
    std::vector<backends::EmbeddingVector> vecs = backends::embed(emb, texts, retry);

    CorpusIndex index;
    index.built_ = true;
    index.entries_ = corpus.entries;
    index.digest_ = expected_digest(corpus, emb.id());
    index.dim_ = vecs.empty() ? 0 : vecs.front().dim();
    index.rows_.reserve(index.entries_.size() * index.dim_);
    for (const auto& v : vecs)
        for (double x : v.values) index.rows_.push_back(static_cast<float>(x));
    return index;
}

void CorpusIndex::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write-then-rename keeps concurrent readers off partial files.
    std::filesystem::path tmp = path;
    tmp += ".tmp-" + std::to_string(uint64_t(::getpid()));
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write embedding cache: " + tmp.string());
        os.write(kCacheMagic, sizeof(kCacheMagic));
        write_pod(os, kCacheVersion);
        write_pod(os, static_cast<uint32_t>(dim_));
        write_pod(os, static_cast<uint64_t>(entries_.size()));
        write_pod(os, digest_);
        os.write(reinterpret_cast<const char*>(rows_.data()),
                 std::streamsize(rows_.size() * sizeof(float)));
        if (!os) throw IoError("short write on embedding cache: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<CorpusIndex> CorpusIndex::load(const std::filesystem::path& path,
                                             const dataset::Corpus& corpus,
                                             std::string_view backend_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) return std::nullopt;
    uint32_t version = 0, dim = 0;
    uint64_t count = 0, digest = 0;
    if (!read_pod(is, version) || version != kCacheVersion) return std::nullopt;
    if (!read_pod(is, dim) || !read_pod(is, count) || !read_pod(is, digest)) return std::nullopt;
    if (count != corpus.entries.size()) return std::nullopt;
    if (digest != expected_digest(corpus, backend_id)) return std::nullopt;

    CorpusIndex index;
    index.built_ = true;
    index.entries_ = corpus.entries;
    index.dim_ = dim;
    index.digest_ = digest;
    index.rows_.resize(size_t(count) * dim);
    is.read(reinterpret_cast<char*>(index.rows_.data()),
            std::streamsize(index.rows_.size() * sizeof(float)));
    if (!is) return std::nullopt;
    return index;
}

CorpusIndex CorpusIndex::build_or_load(const dataset::Corpus& corpus,
                                       backends::EmbeddingBackend& emb,
                                       const std::filesystem::path& cache_path,
                                       const backends::RetryPolicy& retry) {
    if (auto cached = load(cache_path, corpus, emb.id())) return std::move(*cached);
    CorpusIndex index = build(corpus, emb, retry);
    index.save(cache_path);
    return index;
}

RetrievalResult retrieve_dense(const CorpusIndex& index, const std::string& query, size_t k,
                               backends::EmbeddingBackend& emb,
                               const backends::RetryPolicy& retry) {
    if (!index.built()) throw IndexMissing("dense retrieval requested before the index was built");
    RetrievalResult result;
    result.query = query;
    result.k = k;
    if (index.size() == 0 || k == 0) return result;

    backends::EmbeddingVector qv = backends::embed(emb, {query}, retry).at(0);
    if (qv.dim() != index.dim())
        throw DimensionMismatch("query embedding dim " + std::to_string(qv.dim()) +
                                " != index dim " + std::to_string(index.dim()));
    double qnorm = std::sqrt(std::inner_product(qv.values.begin(), qv.values.end(),
                                                qv.values.begin(), 0.0));

    std::vector<std::pair<double, size_t>> scored(index.size());
    for (size_t i = 0; i < index.size(); ++i) {
        std::span<const float> row = index.row(i);
        double dot = 0.0, norm = 0.0;
        for (size_t j = 0; j < row.size(); ++j) {
            dot += qv.values[j] * double(row[j]);
            norm += double(row[j]) * double(row[j]);
        }
        norm = std::sqrt(norm);
        // Zero-norm rows (or a zero query) sink below any real cosine.
        double score = (qnorm == 0.0 || norm == 0.0) ? -1.0 : dot / (qnorm * norm);
        scored[i] = {score, i};
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return index.entries()[a.second].doc_id < index.entries()[b.second].doc_id;
    });
    size_t take = std::min(k, scored.size());
    for (size_t i = 0; i < take; ++i) {
        const auto& entry = index.entries()[scored[i].second];
        result.items.push_back({entry.doc_id, scored[i].first, entry_presentation(entry)});
    }
    return result;
}

DistractorStore DistractorStore::from_samples(const std::vector<dataset::QaSample>& samples) {
    DistractorStore store;
    for (const auto& sample : samples) store.facts_by_sample[sample.sample_id] = sample.facts;
    return store;
}

RetrievalResult retrieve_distractor(const std::string& sample_id, const DistractorStore& store) {
    auto it = store.facts_by_sample.find(sample_id);
    if (it == store.facts_by_sample.end())
        throw UnknownSample("no fact set for sample '" + sample_id + "'");
    RetrievalResult result;
    result.query = sample_id;
    result.k = it->second.size();
    for (const auto& fact : it->second)
        result.items.push_back({fact.id, 1.0, dataset::presentation_line(fact)});
    return result;
}

RetrievalResult retrieve_triples(const dataset::TripleStore& store, const tags::SearchCall& call,
                                 const std::vector<tags::CandidateBinding>& bindings) {
    std::string name;
    if (call.entity_ref) {
        auto it = std::find_if(bindings.begin(), bindings.end(),
                               [&](const tags::CandidateBinding& b) {
                                   return b.index == *call.entity_ref;
                               });
        if (it == bindings.end())
            throw UnresolvedEntity("no candidate bound to [" + std::to_string(*call.entity_ref) +
                                   "]");
        name = it->surface;
    } else if (call.entity_surface && !call.entity_surface->empty()) {
        name = *call.entity_surface;
    } else {
        throw UnresolvedEntity("triple retrieval needs an entity, got a plain search");
    }

    // Exact subject, then case-insensitive, then disambiguated "Name (...)".
    std::string subject;
    if (store.by_subject.count(name)) {
        subject = name;
    } else {
        std::string target = lower_ascii(name);
        for (const auto& [key, positions] : store.by_subject) {
            (void)positions;
            std::string key_lower = lower_ascii(key);
            if (key_lower == target || lower_ascii(base_name(key)) == target) {
                subject = key;
                break;
            }
        }
    }

    RetrievalResult result;
    result.query = call.question;
    if (subject.empty()) return result;  // resolvable name, no triples: empty, not an error
    const auto& positions = store.by_subject.at(subject);
    result.k = positions.size();
    for (size_t pos : positions)
        result.items.push_back({"t" + std::to_string(pos), 1.0,
                                dataset::render_triple(store.triples[pos])});
    return result;
}

Annotator make_triple_annotator(const dataset::TripleStore& store) {
    return [&store](const std::string& sentence,
                    std::vector<tags::CandidateBinding>& bindings) -> std::string {
        struct Hit {
            size_t pos;
            std::string surface;
        };
        auto bound = [&](const std::string& name) {
            std::string n = lower_ascii(name);
            return std::any_of(bindings.begin(), bindings.end(),
                               [&](const tags::CandidateBinding& b) {
                                   return lower_ascii(b.surface) == n;
                               });
        };
        std::vector<Hit> hits;
        for (const auto& [subject, positions] : store.by_subject) {
            (void)positions;
            std::string base = base_name(subject);
            size_t pos = ci_find(sentence, base);
            if (pos == std::string::npos) continue;
            std::string surface = sentence.substr(pos, base.size());
            if (bound(surface) || bound(subject)) continue;
            if (std::any_of(hits.begin(), hits.end(), [&](const Hit& h) {
                    return lower_ascii(h.surface) == lower_ascii(surface);
                }))
                continue;
            hits.push_back({pos, std::move(surface)});
        }
        std::stable_sort(hits.begin(), hits.end(),
                         [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
        if (hits.empty()) return sentence;
        std::string out = sentence + " Candidate: ";
        int next = int(bindings.size());
        for (size_t i = 0; i < hits.size(); ++i) {
            if (i) out += ", ";
            out += "[" + std::to_string(next) + "] " + hits[i].surface;
            bindings.push_back({next, hits[i].surface});
            ++next;
        }
        return out;
    };
}

namespace {

// One executor call over retrieved items; protocol violations degrade to the
// no-information sentinel instead of failing the trace.
std::string executor_answer(backends::GenerationBackend& gen, const prompts::PromptSet& prompt_set,
                            const std::string& sub_question,
                            const std::vector<RetrievedItem>& items, const AgentConfig& config) {
    std::vector<dataset::SupportingFact> facts;
    facts.reserve(items.size());
    for (const auto& item : items)
        facts.push_back({item.id, dataset::FactKind::text_paragraph, item.content, std::nullopt});

    GenerationRequest req;
    req.messages = {{Role::system, prompt_set.executor_train},
                    {Role::user, trajectory::executor_user_block(sub_question, facts)}};
    req.max_tokens = config.limits.max_tokens;
    req.temperature = config.limits.temperature;
    for (int attempt = 0; attempt < 3; ++attempt) {
        req.seed = uint64_t(attempt);
        std::string reply = backends::generate(gen, req, config.retry);
        try {
            tags::ParseOptions opts;
            opts.mode = tags::ParseMode::lenient;
            tags::ParsedTurn turn = tags::parse_turn(reply, tags::Dialect::plain, opts);
            if (turn.is_no_info()) return std::string(tags::kNoInfoLine);
            if (turn.is_select() && !turn.select_and_answer().answer_sentence.empty())
                return turn.select_and_answer().answer_sentence;
            if (turn.is_final() && !turn.final_answer().text.empty())
                return turn.final_answer().text;
            // An action body (or an empty answer) from the executor: retry.
        } catch (const TagError&) {
        }
    }
    return std::string(tags::kNoInfoLine);
}

}  // namespace

AnswerTrace run_agent(const std::string& question, backends::GenerationBackend& planner_backend,
                      backends::GenerationBackend& executor_backend, const Retriever& retriever,
                      const prompts::PromptSet& prompt_set, const AgentConfig& config) {
    AnswerTrace trace;
    trace.question = question;
    trace.termination = Termination::protocol_failure;

    std::vector<tags::CandidateBinding> bindings = config.initial_bindings;
    const std::string& system = config.dialect == tags::Dialect::plain
                                    ? prompt_set.planner_train_plain
                                    : prompt_set.planner_train_entity;
    std::string opening = "Question: " + question;
    if (config.dialect == tags::Dialect::entity_anchored && !bindings.empty())
        opening += " " + tags::format_candidate_list(bindings);
    std::vector<ChatMessage> messages = {{Role::system, system}, {Role::user, opening}};

    int action_turns = 0;
    try {
        for (;;) {
            // Up to three generations per turn slot; a slot that never parses
            // (or keeps violating the planner role) fails the episode.
            std::optional<tags::ParsedTurn> turn;
            for (int attempt = 0; attempt < 3 && !turn; ++attempt) {
                GenerationRequest req;
                req.messages = messages;
                req.max_tokens = config.limits.max_tokens;
                req.temperature = config.limits.temperature;
                req.seed = uint64_t(attempt);
                std::string reply = backends::generate(planner_backend, req, config.retry);
                try {
                    tags::ParseOptions opts;
                    opts.mode = tags::ParseMode::lenient;
                    opts.bindings = bindings;
                    tags::ParsedTurn candidate = tags::parse_turn(reply, config.dialect, opts);
                    if (candidate.is_select() || candidate.is_no_info()) continue;
                    if (candidate.is_action() &&
                        int(candidate.actions().size()) > config.limits.max_actions_per_step)
                        continue;
                    turn = std::move(candidate);
                } catch (const TagError&) {
                }
            }
            if (!turn) return trace;  // protocol_failure

            if (turn->is_final()) {
                trace.transcript.push_back(
                    {Role::assistant, tags::render_turn(*turn, config.dialect)});
                trace.final_answer = std::string(util::trim(turn->final_answer().text));
                trace.termination = Termination::answered;
                return trace;
            }

            if (action_turns == config.limits.max_steps) {
                // The planner wants yet another search round; the trace keeps
                // only completed turns so retrievals still match actions.
                trace.termination = Termination::step_budget;
                return trace;
            }
            ++action_turns;

            // Buffer the whole turn; commit only when every call resolved, so
            // a mid-turn failure cannot leave orphaned retrievals behind.
            std::vector<RetrievalResult> turn_retrievals;
            std::vector<std::string> lines;
            for (const auto& call : turn->actions()) {
                RetrievalResult retrieved = retriever(call, bindings);
                std::string sentence =
                    retrieved.items.empty()
                        ? std::string(tags::kNoInfoLine)
                        : executor_answer(executor_backend, prompt_set, call.question,
                                          retrieved.items, config);
                if (config.annotator) sentence = config.annotator(sentence, bindings);
                turn_retrievals.push_back(std::move(retrieved));
                lines.push_back(std::move(sentence));
            }

            std::string rendered = tags::render_turn(*turn, config.dialect);
            std::string observation = planner::observation_prefix(config.dialect);
            for (size_t i = 0; i < lines.size(); ++i) {
                if (i) observation += "\n";
                observation += lines[i];
            }
            messages.push_back({Role::assistant, rendered});
            messages.push_back({Role::user, observation});
            trace.transcript.push_back({Role::assistant, rendered});
            trace.transcript.push_back({Role::user, observation});
            for (auto& r : turn_retrievals) trace.retrievals.push_back(std::move(r));
        }
    } catch (const Error&) {
        trace.termination = Termination::protocol_failure;
    }
    return trace;
}

}  // namespace evipath::runtime
