#include "evipath/dataset.hpp"

#include "evipath/errors.hpp"
#include "evipath/unicode.hpp"
#include "evipath/util.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace evipath::dataset {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(FactKind kind) {
    switch (kind) {
    case FactKind::text_sentence: return "text_sentence";
    case FactKind::text_paragraph: return "text_paragraph";
    case FactKind::kg_triple: return "kg_triple";
    }
    return "text_sentence";
}

std::optional<FactKind> fact_kind_from(std::string_view name) {
    if (name == "text_sentence") return FactKind::text_sentence;
    if (name == "text_paragraph") return FactKind::text_paragraph;
    if (name == "kg_triple") return FactKind::kg_triple;
    return std::nullopt;
}

std::string_view to_string(Format format) {
    switch (format) {
    case Format::canonical: return "canonical";
    case Format::hotpot_like: return "hotpot";
    case Format::musique_like: return "musique";
    case Format::wiki2_like: return "wiki2";
    }
    return "canonical";
}

std::optional<Format> format_from(std::string_view name) {
    if (name == "canonical") return Format::canonical;
    if (name == "hotpot" || name == "hotpot_like") return Format::hotpot_like;
    if (name == "musique" || name == "musique_like") return Format::musique_like;
    if (name == "wiki2" || name == "wiki2_like") return Format::wiki2_like;
    return std::nullopt;
}

const SupportingFact* QaSample::find_fact(std::string_view id) const {
    for (const auto& f : facts)
        if (f.id == id) return &f;
    return nullptr;
}

bool QaSample::is_golden(std::string_view id) const {
    return std::find(golden_ids.begin(), golden_ids.end(), id) != golden_ids.end();
}

std::vector<const Triple*> TripleStore::lookup(std::string_view subject) const {
    std::vector<const Triple*> out;
    auto it = by_subject.find(std::string(subject));
    if (it == by_subject.end()) return out;
    out.reserve(it->second.size());
    for (size_t pos : it->second) out.push_back(&triples[pos]);
    return out;
}

std::optional<Triple> parse_triple(std::string_view content) {
    std::string_view s = util::trim(content);
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') return std::nullopt;
    s = s.substr(1, s.size() - 2);
    size_t first = s.find(", ");
    if (first == std::string_view::npos) return std::nullopt;
    size_t second = s.find(", ", first + 2);
    if (second == std::string_view::npos) return std::nullopt;
    Triple t;
    t.subject = std::string(util::trim(s.substr(0, first)));
    t.relation = std::string(util::trim(s.substr(first + 2, second - first - 2)));
    t.object = std::string(util::trim(s.substr(second + 2)));
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) return std::nullopt;
    return t;
}

std::string render_triple(const Triple& triple) {
    return "(" + triple.subject + ", " + triple.relation + ", " + triple.object + ")";
}

std::string presentation_line(const SupportingFact& fact) {
    if (fact.kind != FactKind::kg_triple && fact.source_title && !fact.source_title->empty())
        return *fact.source_title + ": " + fact.content;
    return fact.content;
}

std::vector<std::string> validate_sample(const QaSample& sample) {
    std::vector<std::string> out;
    if (sample.sample_id.empty()) out.push_back("sample_id: empty");
    if (sample.question.empty()) out.push_back("question: empty");
    if (sample.answer.empty()) out.push_back("answer: empty");

    std::unordered_set<std::string> ids;
    for (size_t i = 0; i < sample.facts.size(); ++i) {
        const auto& f = sample.facts[i];
        std::string at = "facts[" + std::to_string(i) + "]";
        if (f.id.empty()) out.push_back(at + ".id: empty");
        else if (!ids.insert(f.id).second)
            out.push_back(at + ".id: duplicate '" + f.id + "'");
        if (f.content.empty()) out.push_back(at + ".content: empty");
        else if (f.kind == FactKind::kg_triple && !parse_triple(f.content))
            out.push_back(at + ".content: not a (subject, relation, object) triple");
    }

    if (sample.golden_ids.empty()) out.push_back("golden_ids: empty");
    for (const auto& gid : sample.golden_ids)
        if (!ids.count(gid))
            out.push_back("golden_ids: '" + gid + "' not among fact ids");
    if (sample.hop_count && *sample.hop_count <= 0)
        out.push_back("hop_count: not positive");
    return out;
}

namespace {

void require_valid(const QaSample& sample, size_t line) {
    auto violations = validate_sample(sample);
    if (violations.empty()) return;
    std::string field = violations.front().substr(0, violations.front().find(':'));
    throw SchemaError(line, field, "invalid sample '" + sample.sample_id +
                                       "': " + util::join(violations, "; "));
}

const json& require_field(const json& doc, const char* name, size_t line) {
    auto it = doc.find(name);
    if (it == doc.end())
        throw SchemaError(line, name, std::string("missing field '") + name + "'");
    return *it;
}

std::string require_string(const json& doc, const char* name, size_t line) {
    const json& v = require_field(doc, name, line);
    if (!v.is_string())
        throw SchemaError(line, name, std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

QaSample sample_from_canonical(const json& doc, size_t line) {
    QaSample s;
    s.sample_id = require_string(doc, "sample_id", line);
    s.question = require_string(doc, "question", line);
    s.answer = require_string(doc, "answer", line);
    const json& facts = require_field(doc, "facts", line);
    if (!facts.is_array()) throw SchemaError(line, "facts", "field 'facts' must be an array");
    for (const auto& fd : facts) {
        SupportingFact f;
        f.id = require_string(fd, "id", line);
        std::string kind = require_string(fd, "kind", line);
        auto parsed = fact_kind_from(kind);
        if (!parsed) throw SchemaError(line, "kind", "unknown fact kind '" + kind + "'");
        f.kind = *parsed;
        f.content = require_string(fd, "content", line);
        const json& title = require_field(fd, "source_title", line);
        if (title.is_string()) f.source_title = title.get<std::string>();
        else if (!title.is_null())
            throw SchemaError(line, "source_title", "field 'source_title' must be string or null");
        s.facts.push_back(std::move(f));
    }
    const json& golden = require_field(doc, "golden_ids", line);
    if (!golden.is_array())
        throw SchemaError(line, "golden_ids", "field 'golden_ids' must be an array");
    for (const auto& g : golden) {
        if (!g.is_string())
            throw SchemaError(line, "golden_ids", "golden_ids entries must be strings");
        s.golden_ids.push_back(g.get<std::string>());
    }
    const json& hops = require_field(doc, "hop_count", line);
    if (hops.is_number_integer()) s.hop_count = hops.get<int>();
    else if (!hops.is_null())
        throw SchemaError(line, "hop_count", "field 'hop_count' must be int or null");
    s.dataset_tag = require_string(doc, "dataset_tag", line);
    return s;
}

// context: [[title, [sentences...]], ...]; supporting_facts: [[title, sent_idx], ...]
QaSample sample_from_hotpot(const json& doc, size_t line) {
    QaSample s;
    s.sample_id = require_string(doc, "_id", line);
    s.question = require_string(doc, "question", line);
    s.answer = require_string(doc, "answer", line);
    s.hop_count = 2;
    s.dataset_tag = "hotpot_like";

    // (title, sentence index) -> fact id
    std::map<std::pair<std::string, size_t>, std::string> sentence_ids;
    const json& context = require_field(doc, "context", line);
    if (!context.is_array())
        throw SchemaError(line, "context", "field 'context' must be an array");
    size_t ordinal = 0;
    for (const auto& para : context) {
        if (!para.is_array() || para.size() != 2 || !para[0].is_string() || !para[1].is_array())
            throw SchemaError(line, "context", "context entries must be [title, [sentences]]");
        std::string title = para[0].get<std::string>();
        size_t sent_idx = 0;
        for (const auto& sent : para[1]) {
            if (!sent.is_string())
                throw SchemaError(line, "context", "sentences must be strings");
            SupportingFact f;
            f.id = s.sample_id + "#" + std::to_string(ordinal++);
            f.kind = FactKind::text_sentence;
            f.content = sent.get<std::string>();
            f.source_title = title;
            sentence_ids[{title, sent_idx++}] = f.id;
            s.facts.push_back(std::move(f));
        }
    }

    const json& golden = require_field(doc, "supporting_facts", line);
    if (!golden.is_array())
        throw SchemaError(line, "supporting_facts", "field 'supporting_facts' must be an array");
    for (const auto& sf : golden) {
        if (!sf.is_array() || sf.size() != 2 || !sf[0].is_string() ||
            !sf[1].is_number_integer())
            throw SchemaError(line, "supporting_facts",
                              "supporting_facts entries must be [title, sentence index]");
        std::string title = sf[0].get<std::string>();
        size_t idx = sf[1].get<size_t>();
        auto it = sentence_ids.find({title, idx});
        if (it == sentence_ids.end())
            throw SchemaError(line, "supporting_facts",
                              "supporting fact (" + title + ", " + std::to_string(idx) +
                                  ") not found in context");
        s.golden_ids.push_back(it->second);
    }
    return s;
}

// paragraphs: [{"title", "paragraph_text", "is_supporting", ...}, ...]
QaSample sample_from_musique(const json& doc, size_t line) {
    QaSample s;
    s.sample_id = require_string(doc, "id", line);
    s.question = require_string(doc, "question", line);
    s.answer = require_string(doc, "answer", line);
    s.dataset_tag = "musique_like";
    // ids look like "2hop__482757_12019"
    if (!s.sample_id.empty() && s.sample_id[0] >= '1' && s.sample_id[0] <= '9' &&
        s.sample_id.find("hop__") != std::string::npos)
        s.hop_count = s.sample_id[0] - '0';

    const json& paragraphs = require_field(doc, "paragraphs", line);
    if (!paragraphs.is_array())
        throw SchemaError(line, "paragraphs", "field 'paragraphs' must be an array");
    size_t ordinal = 0;
    for (const auto& para : paragraphs) {
        SupportingFact f;
        f.id = s.sample_id + "#" + std::to_string(ordinal++);
        f.kind = FactKind::text_paragraph;
        f.content = require_string(para, "paragraph_text", line);
        f.source_title = require_string(para, "title", line);
        const json& supporting = require_field(para, "is_supporting", line);
        if (!supporting.is_boolean())
            throw SchemaError(line, "is_supporting", "field 'is_supporting' must be a bool");
        if (supporting.get<bool>()) s.golden_ids.push_back(f.id);
        s.facts.push_back(std::move(f));
    }
    return s;
}

// evidences: [[subject, relation, object], ...] (all golden), plus hotpot-style
// context/supporting_facts for the text side.
QaSample sample_from_wiki2(const json& doc, size_t line) {
    QaSample s;
    s.sample_id = require_string(doc, "_id", line);
    s.question = require_string(doc, "question", line);
    s.answer = require_string(doc, "answer", line);
    s.dataset_tag = "wiki2_like";

    size_t ordinal = 0;
    const json& evidences = require_field(doc, "evidences", line);
    if (!evidences.is_array())
        throw SchemaError(line, "evidences", "field 'evidences' must be an array");
    for (const auto& ev : evidences) {
        if (!ev.is_array() || ev.size() != 3 || !ev[0].is_string() || !ev[1].is_string() ||
            !ev[2].is_string())
            throw SchemaError(line, "evidences",
                              "evidences entries must be [subject, relation, object]");
        SupportingFact f;
        f.id = s.sample_id + "#" + std::to_string(ordinal++);
        f.kind = FactKind::kg_triple;
        f.content = render_triple(
            {ev[0].get<std::string>(), ev[1].get<std::string>(), ev[2].get<std::string>()});
        s.golden_ids.push_back(f.id);
        s.facts.push_back(std::move(f));
    }

    std::map<std::pair<std::string, size_t>, std::string> sentence_ids;
    const json& context = require_field(doc, "context", line);
    if (!context.is_array())
        throw SchemaError(line, "context", "field 'context' must be an array");
    for (const auto& para : context) {
        if (!para.is_array() || para.size() != 2 || !para[0].is_string() || !para[1].is_array())
            throw SchemaError(line, "context", "context entries must be [title, [sentences]]");
        std::string title = para[0].get<std::string>();
        size_t sent_idx = 0;
        for (const auto& sent : para[1]) {
            if (!sent.is_string())
                throw SchemaError(line, "context", "sentences must be strings");
            SupportingFact f;
            f.id = s.sample_id + "#" + std::to_string(ordinal++);
            f.kind = FactKind::text_sentence;
            f.content = sent.get<std::string>();
            f.source_title = title;
            sentence_ids[{title, sent_idx++}] = f.id;
            s.facts.push_back(std::move(f));
        }
    }
    const json& golden = require_field(doc, "supporting_facts", line);
    if (!golden.is_array())
        throw SchemaError(line, "supporting_facts", "field 'supporting_facts' must be an array");
    for (const auto& sf : golden) {
        if (!sf.is_array() || sf.size() != 2 || !sf[0].is_string() ||
            !sf[1].is_number_integer())
            throw SchemaError(line, "supporting_facts",
                              "supporting_facts entries must be [title, sentence index]");
        auto it = sentence_ids.find({sf[0].get<std::string>(), sf[1].get<size_t>()});
        if (it == sentence_ids.end())
            throw SchemaError(line, "supporting_facts",
                              "supporting fact (" + sf[0].get<std::string>() + ", " +
                                  std::to_string(sf[1].get<size_t>()) + ") not found in context");
        s.golden_ids.push_back(it->second);
    }
    return s;
}

QaSample sample_from(const json& doc, Format format, size_t line) {
    switch (format) {
    case Format::canonical: return sample_from_canonical(doc, line);
    case Format::hotpot_like: return sample_from_hotpot(doc, line);
    case Format::musique_like: return sample_from_musique(doc, line);
    case Format::wiki2_like: return sample_from_wiki2(doc, line);
    }
    throw Error("unknown dataset format");
}

} // namespace

std::vector<QaSample> load_samples(const std::filesystem::path& path, Format format) {
    std::vector<QaSample> out;
    std::string raw = util::read_file(path);
    std::string_view head = util::ltrim(raw);

    if (!head.empty() && head.front() == '[') {
        // whole-file JSON array (the usual distribution shape for hotpot-style data)
        json doc = json::parse(raw, nullptr, false);
        if (doc.is_discarded() || !doc.is_array())
            throw ParseError(1, "malformed JSON array in " + path.filename().string());
        size_t entry = 0;
        for (const auto& item : doc) {
            ++entry; // entry ordinal doubles as the reported "line"
            out.push_back(sample_from(item, format, entry));
            require_valid(out.back(), entry);
        }
        return out;
    }

    util::for_each_jsonl(path, [&](size_t line_no, const nlohmann::ordered_json& doc) {
        out.push_back(sample_from(doc, format, line_no));
        require_valid(out.back(), line_no);
    });
    return out;
}

void write_samples(const std::filesystem::path& path, const std::vector<QaSample>& samples) {
    std::string buf;
    for (const auto& s : samples) {
        ordered_json doc;
        doc["sample_id"] = s.sample_id;
        doc["question"] = s.question;
        doc["answer"] = s.answer;
        auto& facts = doc["facts"] = ordered_json::array();
        for (const auto& f : s.facts) {
            ordered_json fd;
            fd["id"] = f.id;
            fd["kind"] = std::string(to_string(f.kind));
            fd["content"] = f.content;
            if (f.source_title) fd["source_title"] = *f.source_title;
            else fd["source_title"] = nullptr;
            facts.push_back(std::move(fd));
        }
        doc["golden_ids"] = s.golden_ids;
        if (s.hop_count) doc["hop_count"] = *s.hop_count;
        else doc["hop_count"] = nullptr;
        doc["dataset_tag"] = s.dataset_tag;
        buf += doc.dump();
        buf += '\n';
    }
    util::write_file(path, buf);
}

Corpus build_corpus(const std::vector<QaSample>& samples) {
    if (samples.empty()) throw EmptyInput("build_corpus: no samples");
    Corpus corpus;
    std::unordered_map<std::string, size_t> seen; // dedup key -> entry position
    for (const auto& s : samples) {
        for (const auto& f : s.facts) {
            std::string key = unicode::dedup_key(f.content);
            if (key.empty() || seen.count(key)) continue;
            CorpusEntry e;
            e.doc_id = "doc-" + std::to_string(corpus.entries.size());
            e.title = f.source_title.value_or("");
            e.text = f.content;
            seen.emplace(std::move(key), corpus.entries.size());
            corpus.entries.push_back(std::move(e));
        }
    }
    corpus.index_meta.count = corpus.entries.size();
    return corpus;
}

TripleStore build_triple_store(const std::vector<QaSample>& samples) {
    TripleStore store;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& s : samples) {
        for (const auto& f : s.facts) {
            if (f.kind != FactKind::kg_triple)
                throw KindMismatch("fact '" + f.id + "' is not a kg_triple");
            auto t = parse_triple(f.content);
            if (!t)
                throw KindMismatch("fact '" + f.id + "' does not parse as a triple: " +
                                   f.content);
            if (!seen.insert({t->subject, t->relation, t->object}).second) continue;
            store.by_subject[t->subject].push_back(store.triples.size());
            store.triples.push_back(std::move(*t));
        }
    }
    return store;
}

} // namespace evipath::dataset
