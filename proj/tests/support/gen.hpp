// Random generators shared by the property tests and the acceptance suite.
#pragma once

#include "evipath/tags.hpp"

#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace testgen {

inline std::string rand_word(std::mt19937_64& rng, size_t min_len = 1, size_t max_len = 8) {
    static constexpr std::string_view chars =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::uniform_int_distribution<size_t> len(min_len, max_len);
    std::uniform_int_distribution<size_t> pick(0, chars.size() - 1);
    size_t n = len(rng);
    std::string out;
    for (size_t i = 0; i < n; ++i) out.push_back(chars[pick(rng)]);
    return out;
}

// Trimmed, '<'-free phrase; safe as canonical tag-body content.
inline std::string rand_phrase(std::mt19937_64& rng, size_t min_words = 1,
                               size_t max_words = 6) {
    std::uniform_int_distribution<size_t> words(min_words, max_words);
    size_t n = words(rng);
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += rand_word(rng);
    }
    return out;
}

inline std::string rand_question(std::mt19937_64& rng) {
    std::string q = rand_phrase(rng, 2, 7);
    switch (rng() % 4) {
    case 0: q += '?'; break;
    case 1: q.insert(q.size() / 2, "\""); break; // exercises escaping
    case 2: q.insert(q.size() / 2, "\\"); break;
    default: break;
    }
    return q;
}

// A canonical-form turn: parse_turn(render_turn(t, d), d) must reproduce it.
// Entity-anchored action calls always carry an anchor; bare-surface anchors
// keep entity_ref unset so equality holds without a binding table.
inline evipath::tags::ParsedTurn rand_turn(std::mt19937_64& rng,
                                           evipath::tags::Dialect d) {
    using namespace evipath::tags;
    ParsedTurn t;
    if (rng() % 4 != 0) {
        std::string think;
        size_t lines = 1 + rng() % 3;
        for (size_t i = 0; i < lines; ++i) {
            if (i) think += '\n';
            think += rand_phrase(rng, 1, 8);
        }
        t.think = std::move(think);
    }
    switch (rng() % 4) {
    case 0: {
        size_t n = 1 + rng() % 3;
        std::vector<SearchCall> calls;
        for (size_t i = 0; i < n; ++i) {
            SearchCall c;
            c.dialect = d;
            c.question = rand_question(rng);
            if (d == Dialect::entity_anchored) {
                switch (rng() % 3) {
                case 0: c.entity_ref = static_cast<int>(rng() % 50); break;
                case 1: c.entity_surface = rand_phrase(rng, 1, 3); break;
                default: // comma inside the surface form
                    c.entity_surface = rand_phrase(rng, 1, 2) + ", " + rand_phrase(rng, 1, 2);
                    break;
                }
            }
            calls.push_back(std::move(c));
        }
        t.body = std::move(calls);
        break;
    }
    case 1:
        t.body = FinalAnswer{rand_phrase(rng, 1, 6)};
        break;
    case 2: {
        SelectAndAnswer s;
        size_t n = 1 + rng() % 4;
        for (size_t i = 0; i < n; ++i) s.selected.push_back(static_cast<int>(rng() % 12));
        s.answer_sentence = rand_phrase(rng, 2, 10) + ".";
        t.body = std::move(s);
        break;
    }
    default:
        t.body = NoInfo{};
        break;
    }
    return t;
}

} // namespace testgen
