#include <doctest.h>

#include "evipath/dataset.hpp"
#include "evipath/errors.hpp"
#include "evipath/util.hpp"
#include "support/fixtures.hpp"

#include <filesystem>

#include <json.hpp>

using namespace evipath;
using namespace evipath::dataset;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("parse_triple") {
    auto t = parse_triple("(Xawery Żuławski, mother, Małgorzata Braunek)");
    REQUIRE(t.has_value());
    CHECK(t->subject == "Xawery Żuławski");
    CHECK(t->relation == "mother");
    CHECK(t->object == "Małgorzata Braunek");

    auto paren = parse_triple("(Naresh Kumar (tennis), date of birth, 22 December 1928)");
    REQUIRE(paren.has_value());
    CHECK(paren->subject == "Naresh Kumar (tennis)");
    CHECK(paren->object == "22 December 1928");

    auto commas = parse_triple("(X, said, hello, world)");
    REQUIRE(commas.has_value());
    CHECK(commas->object == "hello, world");

    CHECK_FALSE(parse_triple("not a triple").has_value());
    CHECK_FALSE(parse_triple("(only, two)").has_value());
    CHECK_FALSE(parse_triple("(a, , b)").has_value());
    CHECK(render_triple(*t) == "(Xawery Żuławski, mother, Małgorzata Braunek)");
}

TEST_CASE("validate_sample is total and reports every violation") {
    CHECK(validate_sample(fixtures::zulawski_sample()).empty());
    CHECK(validate_sample(fixtures::ek_paheli_sample()).empty());
    CHECK(validate_sample(fixtures::collegian_sample()).empty());

    QaSample bad = fixtures::collegian_sample();
    bad.answer.clear();
    bad.golden_ids.push_back("g9");
    bad.golden_ids.push_back("g10");
    bad.facts[1].content.clear();
    auto violations = validate_sample(bad);
    REQUIRE(violations.size() == 4);
    CHECK(violations[0] == "answer: empty");
    CHECK(violations[1] == "facts[1].content: empty");
    CHECK(violations[2] == "golden_ids: 'g9' not among fact ids");
    CHECK(violations[3] == "golden_ids: 'g10' not among fact ids");

    QaSample dup = fixtures::zulawski_sample();
    dup.facts[3].id = dup.facts[2].id;
    auto v2 = validate_sample(dup);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].find("duplicate") != std::string::npos);

    QaSample nogold = fixtures::zulawski_sample();
    nogold.golden_ids.clear();
    CHECK(validate_sample(nogold) == std::vector<std::string>{"golden_ids: empty"});
}

TEST_CASE("canonical round trip preserves samples byte-for-byte") {
    TempDir dir("evipath_dataset_rt");
    std::vector<QaSample> samples = {fixtures::zulawski_sample(), fixtures::ek_paheli_sample(),
                                     fixtures::collegian_sample()};
    fs::path p = dir.path / "samples.jsonl";
    write_samples(p, samples);
    auto loaded = load_samples(p, Format::canonical);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded == samples);
    CHECK(loaded[0].sample_id == "zulawski");
    CHECK(loaded[2].facts[0].source_title == "The Collegian");

    // writing the loaded list reproduces identical bytes
    fs::path p2 = dir.path / "samples2.jsonl";
    write_samples(p2, loaded);
    CHECK(util::read_file(p) == util::read_file(p2));
}

TEST_CASE("canonical loader: schema violations name the field") {
    TempDir dir("evipath_dataset_schema");
    fs::path p = dir.path / "bad.jsonl";

    SUBCASE("missing field") {
        util::write_file(p, "{\"sample_id\":\"s1\",\"question\":\"q\"}\n");
        try {
            (void)load_samples(p, Format::canonical);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.field == "answer");
            CHECK(e.line == 1);
        }
    }
    SUBCASE("dangling golden id") {
        QaSample s = fixtures::collegian_sample();
        s.golden_ids.push_back("g9");
        write_samples(p, {s});
        try {
            (void)load_samples(p, Format::canonical);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("g9") != std::string::npos);
        }
    }
    SUBCASE("malformed JSON line carries line number") {
        util::write_file(p, "{\"sample_id\":\"ok\"}\nnot json\n");
        try {
            (void)load_samples(p, Format::canonical);
            FAIL("expected an error");
        } catch (const SchemaError&) {
            // line 1 is schema-invalid before line 2 is reached; acceptable
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
}

TEST_CASE("hotpot_like mapping: sentences, ids, golden resolution") {
    TempDir dir("evipath_dataset_hotpot");
    // 10 titled paragraphs, two sentences each; two sentences are golden
    json context = json::array();
    for (int i = 0; i < 10; ++i) {
        context.push_back({"T" + std::to_string(i),
                           {"T" + std::to_string(i) + " first sentence.",
                            "T" + std::to_string(i) + " second sentence."}});
    }
    json doc = {{"_id", "h1"},
                {"question", "q?"},
                {"answer", "ans"},
                {"context", context},
                {"supporting_facts", json::array({{"T3", 1}, {"T7", 0}})}};
    fs::path p = dir.path / "hotpot.jsonl";
    util::write_file(p, doc.dump() + "\n");

    auto samples = load_samples(p, Format::hotpot_like);
    REQUIRE(samples.size() == 1);
    const auto& s = samples[0];
    CHECK(s.sample_id == "h1");
    CHECK(s.facts.size() == 20);
    CHECK(s.facts[0].kind == FactKind::text_sentence);
    CHECK(s.facts[0].id == "h1#0");
    CHECK(s.facts[7].content == "T3 second sentence.");
    CHECK(s.golden_ids == std::vector<std::string>{"h1#7", "h1#14"});
    CHECK(s.hop_count == 2);
    CHECK(s.dataset_tag == "hotpot_like");

    // same document as a whole-file JSON array also loads
    fs::path pa = dir.path / "hotpot.json";
    util::write_file(pa, json::array({doc}).dump());
    CHECK(load_samples(pa, Format::hotpot_like) == samples);

    // golden referencing a missing sentence -> SchemaError
    doc["supporting_facts"].push_back({"T99", 0});
    util::write_file(p, doc.dump() + "\n");
    CHECK_THROWS_AS((void)load_samples(p, Format::hotpot_like), SchemaError);
}

TEST_CASE("musique_like mapping: paragraphs and hop prefix") {
    TempDir dir("evipath_dataset_musique");
    json doc = {{"id", "2hop__482757_12019"},
                {"question", "q?"},
                {"answer", "ans"},
                {"paragraphs", json::array({json{{"title", "P0"},
                                                 {"paragraph_text", "First paragraph."},
                                                 {"is_supporting", false}},
                                            json{{"title", "P1"},
                                                 {"paragraph_text", "Second paragraph."},
                                                 {"is_supporting", true}}})}};
    fs::path p = dir.path / "musique.jsonl";
    util::write_file(p, doc.dump() + "\n");
    auto samples = load_samples(p, Format::musique_like);
    REQUIRE(samples.size() == 1);
    const auto& s = samples[0];
    CHECK(s.facts.size() == 2);
    CHECK(s.facts[0].kind == FactKind::text_paragraph);
    CHECK(s.facts[1].source_title == "P1");
    CHECK(s.golden_ids == std::vector<std::string>{"2hop__482757_12019#1"});
    CHECK(s.hop_count == 2);
}

TEST_CASE("wiki2_like mapping: triples all golden plus supporting sentences") {
    TempDir dir("evipath_dataset_wiki2");
    json doc = {{"_id", "w1"},
                {"question", "Who is the mother of Xawery Żuławski?"},
                {"answer", "Małgorzata Braunek"},
                {"evidences", json::array({{"Xawery Żuławski", "mother", "Małgorzata Braunek"}})},
                {"context", json::array({json::array(
                                {"Xawery Żuławski",
                                 json::array({"Xawery Żuławski is a Polish film director.",
                                              "He was born in Warsaw."})})})},
                {"supporting_facts", json::array({{"Xawery Żuławski", 0}})}};
    fs::path p = dir.path / "wiki2.jsonl";
    util::write_file(p, doc.dump() + "\n");
    auto samples = load_samples(p, Format::wiki2_like);
    REQUIRE(samples.size() == 1);
    const auto& s = samples[0];
    REQUIRE(s.facts.size() == 3);
    CHECK(s.facts[0].kind == FactKind::kg_triple);
    CHECK(s.facts[0].content == "(Xawery Żuławski, mother, Małgorzata Braunek)");
    CHECK(s.facts[1].kind == FactKind::text_sentence);
    CHECK(s.golden_ids == std::vector<std::string>{"w1#0", "w1#1"});
}

TEST_CASE("build_corpus: dedup, determinism, EmptyInput") {
    auto a = fixtures::collegian_sample();
    auto b = fixtures::collegian_sample();
    b.sample_id = "collegian-copy";
    for (auto& f : b.facts) f.id = b.sample_id + f.id.substr(9);
    b.golden_ids = {b.facts[0].id, b.facts[1].id};
    b.facts[3].content = "A sentence only the copy has.";

    auto corpus = build_corpus({a, b});
    CHECK(corpus.entries.size() == 5); // 4 shared + 1 unique
    CHECK(corpus.index_meta.count == 5);
    CHECK(corpus.entries[0].doc_id == "doc-0");
    CHECK(corpus.entries[0].text == a.facts[0].content);
    CHECK(corpus.entries[4].text == "A sentence only the copy has.");

    // idempotent doc id assignment
    auto corpus2 = build_corpus({a, b});
    REQUIRE(corpus2.entries.size() == corpus.entries.size());
    for (size_t i = 0; i < corpus.entries.size(); ++i)
        CHECK(corpus.entries[i] == corpus2.entries[i]);

    // whitespace-variant content deduplicates
    auto c = a;
    c.facts[0].content = "  The Collegian is owned by   Houston Baptist University.  ";
    CHECK(build_corpus({a, c}).entries.size() == 4);

    auto single = build_corpus({fixtures::zulawski_sample()});
    CHECK(single.entries.size() == 10);

    CHECK_THROWS_AS((void)build_corpus({}), EmptyInput);
}

TEST_CASE("build_triple_store: subject lookup and dedup") {
    auto store = build_triple_store({fixtures::zulawski_sample()});
    CHECK(store.triples.size() == 10);
    CHECK(store.lookup("Xawery Żuławski").size() == 8);
    CHECK(store.lookup("Andrzej Żuławski").size() == 1);
    CHECK(store.lookup("Małgorzata Braunek").size() == 1);
    CHECK(store.lookup("Nobody").empty());
    CHECK(store.lookup("Xawery Żuławski")[0]->relation == "mother");

    // duplicate rows collapse
    auto twice = build_triple_store({fixtures::zulawski_sample(), fixtures::zulawski_sample()});
    CHECK(twice.triples.size() == 10);

    CHECK(build_triple_store({}).triples.empty());

    CHECK_THROWS_AS((void)build_triple_store({fixtures::collegian_sample()}), KindMismatch);
}
