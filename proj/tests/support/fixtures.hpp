// Hand-constructed samples reused across suites. The triple pools and
// expected conversations mirror the project's prompt-template examples.
#pragma once

#include "evipath/dataset.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace fixtures {

using evipath::dataset::FactKind;
using evipath::dataset::QaSample;
using evipath::dataset::SupportingFact;

// 10-triple pool; 8 triples share the subject "Xawery Żuławski", one golden.
inline QaSample zulawski_sample() {
    QaSample s;
    s.sample_id = "zulawski";
    s.question = "Who is the mother of Xawery Żuławski?";
    s.answer = "Małgorzata Braunek";
    s.dataset_tag = "fixture";
    s.hop_count = 1;
    const std::vector<std::string> triples = {
        "(Xawery Żuławski, mother, Małgorzata Braunek)",
        "(Xawery Żuławski, father, Andrzej Żuławski)",
        "(Xawery Żuławski, family, Q63532193)",
        "(Xawery Żuławski, family name, Q56541485)",
        "(Xawery Żuławski, spouse, Maria Strzelecka)",
        "(Xawery Żuławski, date of birth, 1971-12-22T00:00:00Z)",
        "(Xawery Żuławski, sibling, Vincent Zulawski)",
        "(Xawery Żuławski, place of birth, Warsaw)",
        "(Andrzej Żuławski, child, Xawery Żuławski)",
        "(Małgorzata Braunek, child, Xawery Żuławski)",
    };
    for (size_t i = 0; i < triples.size(); ++i) {
        SupportingFact f;
        f.id = "zulawski#" + std::to_string(i);
        f.kind = FactKind::kg_triple;
        f.content = triples[i];
        s.facts.push_back(std::move(f));
    }
    s.golden_ids = {"zulawski#0"};
    return s;
}

// Comparison question over four golden triples (entity-anchored dialect).
inline QaSample ek_paheli_sample() {
    QaSample s;
    s.sample_id = "ekpaheli";
    s.question =
        "Which film has the director born earlier, Ek Paheli or When Father Was Away On "
        "Business?";
    s.answer = "Ek Paheli";
    s.dataset_tag = "fixture";
    s.hop_count = 2;
    const std::vector<std::string> triples = {
        "(Ek Paheli, director, Naresh Kumar)",
        "(When Father Was Away on Business, director, Emir Kusturica)",
        "(Naresh Kumar (tennis), date of birth, 22 December 1928)",
        "(Emir Kusturica, date of birth, 24 November 1954)",
    };
    for (size_t i = 0; i < triples.size(); ++i) {
        SupportingFact f;
        f.id = "ekpaheli#" + std::to_string(i);
        f.kind = FactKind::kg_triple;
        f.content = triples[i];
        s.golden_ids.push_back(f.id);
        s.facts.push_back(std::move(f));
    }
    return s;
}

// Two-hop text sample with two distractor sentences (plain dialect).
inline QaSample collegian_sample() {
    QaSample s;
    s.sample_id = "collegian";
    s.question = "When was the institute that owned The Collegian founded?";
    s.answer = "1960";
    s.dataset_tag = "fixture";
    s.hop_count = 2;
    struct Row {
        const char* title;
        const char* text;
        bool golden;
    };
    const std::vector<Row> rows = {
        {"The Collegian", "The Collegian is owned by Houston Baptist University.", true},
        {"Houston Baptist University", "Houston Baptist University was founded in 1960.", true},
        {"Glamour (magazine)",
         "Glamour is a women's magazine published by Condé Nast Publications.", false},
        {"Salt to the Sea",
         "Salt to the Sea is a 2016 historical fiction young adult novel by Ruta Sepetys.",
         false},
    };
    for (size_t i = 0; i < rows.size(); ++i) {
        SupportingFact f;
        f.id = "collegian#" + std::to_string(i);
        f.kind = FactKind::text_sentence;
        f.content = rows[i].text;
        f.source_title = rows[i].title;
        s.facts.push_back(std::move(f));
        if (rows[i].golden) s.golden_ids.push_back("collegian#" + std::to_string(i));
    }
    return s;
}

// n two-fact samples ("When was Thing{i} founded?"): one golden sentence plus
// one distractor each. Sized for throughput and golden-file tests.
inline std::vector<QaSample> founding_samples(size_t n) {
    std::vector<QaSample> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        QaSample s;
        char buf[24];
        std::snprintf(buf, sizeof buf, "%04zu", i);
        s.sample_id = "founding-" + std::string(buf);
        std::string thing = "Thing" + std::to_string(i);
        std::string year = std::to_string(1900 + int(i % 100));
        s.question = "When was " + thing + " founded?";
        s.answer = year;
        s.dataset_tag = "founding";
        s.hop_count = 1;
        SupportingFact golden;
        golden.id = s.sample_id + "#0";
        golden.kind = FactKind::text_sentence;
        golden.content = thing + " was founded in " + year + ".";
        SupportingFact distractor;
        distractor.id = s.sample_id + "#1";
        distractor.kind = FactKind::text_sentence;
        distractor.content = "Gadget" + std::to_string(i) + " is painted blue.";
        s.facts = {std::move(golden), std::move(distractor)};
        s.golden_ids = {s.sample_id + "#0"};
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace fixtures
