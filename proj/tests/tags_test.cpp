#include <doctest.h>

#include "evipath/errors.hpp"
#include "evipath/tags.hpp"
#include "support/gen.hpp"

#include <functional>
#include <random>

using namespace evipath;
using namespace evipath::tags;

namespace {

TagErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const TagError& e) {
        return e.kind;
    }
    FAIL("expected TagError");
    return TagErrorKind::unclosed_tag; // unreachable
}

const std::string kEkPaheliTurn1 =
    "<think>\n"
    "To solve this problem, I need to:\n"
    "1. Find the director of film Ek Paheli.\n"
    "2. Find the director of film When Father Was Away On Business.\n"
    "3. Figure out the date of birth of the director of Ek Paheli.\n"
    "4. Figure out the date of birth of the director of When Father Was Away On Business.\n"
    "5. Compare their dates of birth to determine which director was born earlier.\n"
    "</think>\n"
    "<action>\n"
    "Search([0], \"Who is the director of Ek Paheli?\")\n"
    "Search([1], \"Who is the director of When Father Was Away On Business?\")\n"
    "</action>";

const std::string kCollegianTurn1 =
    "<think>\n"
    "To solve this problem, I need to:\n"
    "1. Find the institute that owned The Collegian.\n"
    "2. Figure out when the institute that owns The Collegian was founded.\n"
    "Now I need to search the information about The Collegian first.\n"
    "</think>\n"
    "<action> Search(\"Which institute owns The Collegian?\") </action>";

const std::string kCollegianFinal =
    "<think>\n"
    "OK. Now I have all the necessary information to answer the question. The question asking "
    "when the institute that owned The Collegian was founded.\n"
    "</think>\n"
    "<answer> 1960 </answer>";

const std::string kLaIshaSelect =
    "<think> The question asks me to determine when the magazine LaIsha was founded. [1] says "
    "the magazine LaIsha was founded in 1947. </think>\n"
    "<select> [1] </select>\n"
    "<answer> LaIsha was founded in 1947. </answer>";

} // namespace

TEST_CASE("parse: entity-anchored planner turn") {
    auto turn = parse_turn(kEkPaheliTurn1, Dialect::entity_anchored);
    REQUIRE(turn.think.has_value());
    CHECK(turn.think->find("5. Compare their dates of birth") != std::string::npos);
    REQUIRE(turn.is_action());
    const auto& calls = turn.actions();
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].entity_ref == 0);
    CHECK(calls[0].question == "Who is the director of Ek Paheli?");
    CHECK_FALSE(calls[0].entity_surface.has_value());
    CHECK(calls[1].entity_ref == 1);
    CHECK(calls[1].question == "Who is the director of When Father Was Away On Business?");
}

TEST_CASE("parse: plain planner turn and final answer") {
    auto turn = parse_turn(kCollegianTurn1, Dialect::plain);
    REQUIRE(turn.is_action());
    REQUIRE(turn.actions().size() == 1);
    CHECK(turn.actions()[0].question == "Which institute owns The Collegian?");
    CHECK_FALSE(turn.actions()[0].entity_ref.has_value());

    auto fin = parse_turn(kCollegianFinal, Dialect::plain);
    REQUIRE(fin.is_final());
    CHECK(fin.final_answer().text == "1960");
}

TEST_CASE("parse: select-and-answer turn") {
    auto turn = parse_turn(kLaIshaSelect, Dialect::plain);
    REQUIRE(turn.is_select());
    CHECK(turn.select_and_answer().selected == std::vector<int>{1});
    CHECK(turn.select_and_answer().answer_sentence == "LaIsha was founded in 1947.");
    REQUIRE(turn.think.has_value());
    CHECK(turn.think->find("[1] says") != std::string::npos);
}

TEST_CASE("parse: no-info turn") {
    auto bare = parse_turn("No relevant information found.", Dialect::plain);
    CHECK(bare.is_no_info());
    CHECK_FALSE(bare.think.has_value());

    auto with_think = parse_turn(
        "<think> None of the evidences mention the founding year. </think>\n"
        "No relevant information found.",
        Dialect::plain);
    CHECK(with_think.is_no_info());
    CHECK(with_think.think == "None of the evidences mention the founding year.");
}

TEST_CASE("round trip: verbatim template turns") {
    for (const auto& [text, dialect] :
         std::vector<std::pair<std::string, Dialect>>{{kEkPaheliTurn1, Dialect::entity_anchored},
                                                      {kCollegianTurn1, Dialect::plain},
                                                      {kCollegianFinal, Dialect::plain},
                                                      {kLaIshaSelect, Dialect::plain}}) {
        auto turn = parse_turn(text, dialect);
        CHECK(render_turn(turn, dialect) == text);
    }
}

TEST_CASE("round trip: random canonical turns, both dialects") {
    std::mt19937_64 rng(7);
    for (Dialect d : {Dialect::plain, Dialect::entity_anchored}) {
        for (int i = 0; i < 300; ++i) {
            auto turn = testgen::rand_turn(rng, d);
            std::string text = render_turn(turn, d);
            auto reparsed = parse_turn(text, d);
            REQUIRE(reparsed == turn);
        }
    }
}

TEST_CASE("canonicalization is idempotent on accepted non-canonical input") {
    const std::string squeezed =
        "<think>t</think><action>Search(\"who?\")\nSearch(\"when?\")</action>";
    auto first = parse_turn(squeezed, Dialect::plain);
    std::string canonical = render_turn(first, Dialect::plain);
    CHECK(canonical != squeezed);
    auto second = parse_turn(canonical, Dialect::plain);
    CHECK(second == first);
    CHECK(render_turn(second, Dialect::plain) == canonical);
}

TEST_CASE("search-call escaping round trips") {
    SearchCall call;
    call.dialect = Dialect::plain;
    call.question = "what does \"d\\b\" mean?";
    ParsedTurn turn;
    turn.body = std::vector<SearchCall>{call};
    std::string text = render_turn(turn, Dialect::plain);
    CHECK(text == "<action> Search(\"what does \\\"d\\\\b\\\" mean?\") </action>");
    auto reparsed = parse_turn(text, Dialect::plain);
    CHECK(reparsed == turn);
}

TEST_CASE("entity surface resolves against bindings, case-insensitively") {
    std::vector<CandidateBinding> bindings = {{0, "Ek Paheli"}, {2, "Naresh Kumar"}};
    ParseOptions opts;
    opts.bindings = bindings;
    auto turn = parse_turn("<action>\nSearch(naresh kumar, \"When was he born?\")\n</action>",
                           Dialect::entity_anchored, opts);
    REQUIRE(turn.is_action());
    CHECK(turn.actions()[0].entity_ref == 2);
    CHECK(turn.actions()[0].entity_surface == "naresh kumar");

    // unknown surface: kept, ref stays empty
    auto unresolved = parse_turn("<action>\nSearch(Mystery Person, \"Who?\")\n</action>",
                                 Dialect::entity_anchored, opts);
    CHECK_FALSE(unresolved.actions()[0].entity_ref.has_value());
    CHECK(unresolved.actions()[0].entity_surface == "Mystery Person");
}

TEST_CASE("entity surface may contain a comma") {
    auto turn = parse_turn("<action>\nSearch(Washington, D.C., \"Who governs it?\")\n</action>",
                           Dialect::entity_anchored);
    CHECK(turn.actions()[0].entity_surface == "Washington, D.C.");
    CHECK(render_turn(turn, Dialect::entity_anchored) ==
          "<action>\nSearch(Washington, D.C., \"Who governs it?\")\n</action>");
}

TEST_CASE("strict errors carry the right kind") {
    auto strict = [](const std::string& text, Dialect d = Dialect::plain) {
        return [text, d] { (void)parse_turn(text, d); };
    };
    CHECK(kind_of(strict("<answer> x ")) == TagErrorKind::unclosed_tag);
    CHECK(kind_of(strict("<foo> x </foo>")) == TagErrorKind::unknown_tag);
    CHECK(kind_of(strict("</answer>")) == TagErrorKind::unknown_tag);
    CHECK(kind_of(strict("<think>t</think><action></action>")) ==
          TagErrorKind::empty_action_block);
    CHECK(kind_of(strict("<action> Search(\"a?\") </action><answer> b </answer>")) ==
          TagErrorKind::multiple_bodies);
    CHECK(kind_of(strict("<answer> a </answer><answer> b </answer>")) ==
          TagErrorKind::multiple_bodies);
    CHECK(kind_of(strict("<answer> x </answer>\nNo relevant information found.")) ==
          TagErrorKind::multiple_bodies);
    CHECK(kind_of(strict("hello <answer> x </answer>")) == TagErrorKind::stray_text);
    CHECK(kind_of(strict("<think>a</think><think>b</think><answer>x</answer>")) ==
          TagErrorKind::duplicate_think);
    CHECK(kind_of(strict("<think>only thoughts</think>")) == TagErrorKind::missing_body);
    CHECK(kind_of(strict("<select> [0] </select>")) == TagErrorKind::incomplete_select);
    CHECK(kind_of(strict("<select> junk </select><answer> x </answer>")) ==
          TagErrorKind::malformed_select);
    CHECK(kind_of(strict("<action> Lookup(\"q\") </action>")) ==
          TagErrorKind::malformed_search_call);
    CHECK(kind_of(strict("<action> Search(\"q\" </action>")) ==
          TagErrorKind::malformed_search_call);
    CHECK(kind_of(strict("<action> Search(\"q\") extra </action>")) ==
          TagErrorKind::malformed_search_call);
    CHECK(kind_of(strict("<action> Search([0], \"q?\") </action>")) ==
          TagErrorKind::malformed_search_call); // entity arg under plain dialect
    CHECK(kind_of(strict("<action> Search(\"q?\") </action>", Dialect::entity_anchored)) ==
          TagErrorKind::malformed_search_call); // missing anchor
    CHECK(kind_of(strict("<action> Search(\"   \") </action>")) ==
          TagErrorKind::malformed_search_call);
}

TEST_CASE("errors report byte offsets") {
    try {
        (void)parse_turn("<think>t</think>\n<foo>", Dialect::plain);
        FAIL("expected TagError");
    } catch (const TagError& e) {
        CHECK(e.offset == 17);
        CHECK(std::string(e.what()).find("at byte 17") != std::string::npos);
    }
}

TEST_CASE("lenient mode tolerates drift but not multiple bodies") {
    ParseOptions lenient;
    lenient.mode = ParseMode::lenient;

    auto stray = parse_turn("Sure! <answer> 1960 </answer>", Dialect::plain, lenient);
    CHECK(stray.is_final());
    CHECK(stray.final_answer().text == "1960");

    auto unknown = parse_turn("<answer> x </answer><eos>", Dialect::plain, lenient);
    CHECK(unknown.is_final());

    auto dropped = parse_turn("<action> Search([0], \"q?\") </action>", Dialect::plain, lenient);
    REQUIRE(dropped.is_action());
    CHECK_FALSE(dropped.actions()[0].entity_ref.has_value());
    CHECK(dropped.actions()[0].question == "q?");

    auto downgraded = parse_turn("<action> Search(\"q?\") </action>", Dialect::entity_anchored,
                                 lenient);
    CHECK(downgraded.actions()[0].dialect == Dialect::plain);

    auto trailing = parse_turn("<action> Search(\"q?\") junk </action>", Dialect::plain, lenient);
    CHECK(trailing.actions()[0].question == "q?");

    CHECK_THROWS_AS((void)parse_turn("<action> Search(\"a?\") </action><answer> b </answer>",
                                     Dialect::plain, lenient),
                    TagError);
}

TEST_CASE("render: entity-anchored call under plain dialect is a DialectMismatch") {
    SearchCall call;
    call.dialect = Dialect::entity_anchored;
    call.entity_ref = 0;
    call.question = "Who?";
    CHECK_THROWS_AS((void)render_search_call(call, Dialect::plain), DialectMismatch);
    ParsedTurn turn;
    turn.body = std::vector<SearchCall>{call};
    CHECK_THROWS_AS((void)render_turn(turn, Dialect::plain), DialectMismatch);
}

TEST_CASE("render: surface form preferred over bracketed index") {
    SearchCall call;
    call.dialect = Dialect::entity_anchored;
    call.entity_ref = 2;
    call.entity_surface = "Naresh Kumar";
    call.question = "When was Naresh Kumar born?";
    CHECK(render_search_call(call, Dialect::entity_anchored) ==
          "Search(Naresh Kumar, \"When was Naresh Kumar born?\")");
    call.entity_surface.reset();
    CHECK(render_search_call(call, Dialect::entity_anchored) ==
          "Search([2], \"When was Naresh Kumar born?\")");
}

TEST_CASE("parse_observation: annotations and headers") {
    auto obs = parse_observation(
        "Observation: \n"
        "The director of Ek Paheli is Naresh Kumar. Candidate: [2] Naresh Kumar\n"
        "The director of When Father Was Away On Business is Emir Kusturica. Candidate: [3] "
        "Emir Kusturica");
    REQUIRE(obs.sentences.size() == 2);
    CHECK(obs.sentences[0] == "The director of Ek Paheli is Naresh Kumar.");
    CHECK(obs.sentences[1] ==
          "The director of When Father Was Away On Business is Emir Kusturica.");
    REQUIRE(obs.bindings.size() == 2);
    CHECK(obs.bindings[0] == CandidateBinding{2, "Naresh Kumar"});
    CHECK(obs.bindings[1] == CandidateBinding{3, "Emir Kusturica"});
}

TEST_CASE("parse_observation: Obs prefix, no annotation") {
    auto obs = parse_observation("Obs: The Collegian is owned by Houston Baptist University.");
    REQUIRE(obs.sentences.size() == 1);
    CHECK(obs.sentences[0] == "The Collegian is owned by Houston Baptist University.");
    CHECK(obs.bindings.empty());
}

TEST_CASE("parse_observation: multi-entry annotation on one line") {
    auto obs = parse_observation("X directed Y and Z starred. Candidate: [4] Y, [5] Z");
    REQUIRE(obs.sentences.size() == 1);
    CHECK(obs.sentences[0] == "X directed Y and Z starred.");
    REQUIRE(obs.bindings.size() == 2);
    CHECK(obs.bindings[0] == CandidateBinding{4, "Y"});
    CHECK(obs.bindings[1] == CandidateBinding{5, "Z"});
}

TEST_CASE("parse_observation: candidate name may contain a comma") {
    auto obs = parse_observation("Found it. Candidate: [4] Kumar, Naresh");
    REQUIRE(obs.bindings.size() == 1);
    CHECK(obs.bindings[0] == CandidateBinding{4, "Kumar, Naresh"});
}

TEST_CASE("parse_observation: malformed annotation stays in the sentence") {
    auto obs = parse_observation("Something about a Candidate: nothing bracketed.");
    REQUIRE(obs.sentences.size() == 1);
    CHECK(obs.sentences[0] == "Something about a Candidate: nothing bracketed.");
    CHECK(obs.bindings.empty());
}

TEST_CASE("parse_observation: duplicate index raises BindingError") {
    CHECK_THROWS_AS((void)parse_observation("A. Candidate: [3] X\nB. Candidate: [3] Y"),
                    BindingError);
    try {
        (void)parse_observation("A. Candidate: [3] X\nB. Candidate: [3] Y");
    } catch (const BindingError& e) {
        CHECK(e.index == 3);
    }
}

TEST_CASE("format_candidate_list") {
    std::vector<CandidateBinding> bindings = {{0, "Ek Paheli"},
                                              {1, "When Father Was Away On Business"}};
    CHECK(format_candidate_list(bindings) ==
          "Candidate: [0] Ek Paheli, [1] When Father Was Away On Business");
    CHECK(format_candidate_list({}) == "Candidate:");
}
