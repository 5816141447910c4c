#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evipath::dataset {

enum class FactKind { text_sentence, text_paragraph, kg_triple };

std::string_view to_string(FactKind kind);
std::optional<FactKind> fact_kind_from(std::string_view name);

struct SupportingFact {
    std::string id; // unique within its sample
    FactKind kind = FactKind::text_sentence;
    std::string content; // kg_triple: "(subject, relation, object)"
    std::optional<std::string> source_title;
    bool operator==(const SupportingFact&) const = default;
};

struct QaSample {
    std::string sample_id;
    std::string question;
    std::string answer;
    std::vector<SupportingFact> facts; // source order preserved
    std::vector<std::string> golden_ids;
    std::optional<int> hop_count; // advisory only
    std::string dataset_tag;
    bool operator==(const QaSample&) const = default;

    const SupportingFact* find_fact(std::string_view id) const;
    bool is_golden(std::string_view id) const;
};

struct CorpusEntry {
    std::string doc_id;
    std::string title;
    std::string text;
    bool operator==(const CorpusEntry&) const = default;
};

struct Corpus {
    std::vector<CorpusEntry> entries;
    struct IndexMeta {
        size_t dim = 0; // 0 until an embedding index is attached
        size_t count = 0;
    } index_meta;
};

struct Triple {
    std::string subject;
    std::string relation;
    std::string object;
    bool operator==(const Triple&) const = default;
};

struct TripleStore {
    std::vector<Triple> triples;                       // deduplicated, input order
    std::map<std::string, std::vector<size_t>> by_subject; // subject -> triple positions

    std::vector<const Triple*> lookup(std::string_view subject) const;
};

// "(subject, relation, object)"; the object may itself contain ", ".
std::optional<Triple> parse_triple(std::string_view content);
std::string render_triple(const Triple& triple);

// How a fact appears in prompt evidence lists: "Title: content" for titled
// text facts, bare content otherwise (triples are already self-describing).
std::string presentation_line(const SupportingFact& fact);

enum class Format { canonical, hotpot_like, musique_like, wiki2_like };

std::string_view to_string(Format format);
std::optional<Format> format_from(std::string_view name); // accepts "hotpot" or "hotpot_like"

// Loads and validates; every returned sample passes validate_sample.
// Throws ParseError (bad JSON, with line number) or SchemaError.
std::vector<QaSample> load_samples(const std::filesystem::path& path, Format format);

// Canonical JSONL writer; load_samples(write_samples(s)) == s.
void write_samples(const std::filesystem::path& path, const std::vector<QaSample>& samples);

// Total: returns every violation ("field: rule"), never throws.
std::vector<std::string> validate_sample(const QaSample& sample);

// Deduplicates fact contents (NFC + whitespace collapse) into a retrieval
// corpus; doc ids are assigned sequentially in first-seen order.
// Throws EmptyInput when samples is empty.
Corpus build_corpus(const std::vector<QaSample>& samples);

// All facts must be kg_triple (KindMismatch otherwise); duplicate rows are
// dropped. An empty sample list yields an empty store.
TripleStore build_triple_store(const std::vector<QaSample>& samples);

} // namespace evipath::dataset
