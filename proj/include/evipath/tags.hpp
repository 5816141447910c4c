#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evipath::tags {

// Search-call surface syntax. plain: Search("question").
// entity_anchored: Search([k], "question") or Search(Entity Name, "question").
enum class Dialect { plain, entity_anchored };

std::string_view to_string(Dialect dialect);
std::optional<Dialect> dialect_from(std::string_view name);

enum class ParseMode {
    strict,  // stray text outside recognized tags is an error
    lenient, // stray text and recoverable drift are skipped
};

struct CandidateBinding {
    int index = 0;
    std::string surface;
    bool operator==(const CandidateBinding&) const = default;
};

struct SearchCall {
    Dialect dialect = Dialect::plain;
    std::optional<int> entity_ref;          // [k] form, or resolved from surface
    std::optional<std::string> entity_surface; // bare-entity form, kept verbatim
    std::string question;
    bool operator==(const SearchCall&) const = default;
};

struct FinalAnswer {
    std::string text;
    bool operator==(const FinalAnswer&) const = default;
};

struct SelectAndAnswer {
    std::vector<int> selected;
    std::string answer_sentence;
    bool operator==(const SelectAndAnswer&) const = default;
};

struct NoInfo {
    bool operator==(const NoInfo&) const = default;
};

inline constexpr std::string_view kNoInfoLine = "No relevant information found.";

struct ParsedTurn {
    std::optional<std::string> think;
    std::variant<std::vector<SearchCall>, FinalAnswer, SelectAndAnswer, NoInfo> body;
    bool operator==(const ParsedTurn&) const = default;

    bool is_action() const { return std::holds_alternative<std::vector<SearchCall>>(body); }
    bool is_final() const { return std::holds_alternative<FinalAnswer>(body); }
    bool is_select() const { return std::holds_alternative<SelectAndAnswer>(body); }
    bool is_no_info() const { return std::holds_alternative<NoInfo>(body); }
    const std::vector<SearchCall>& actions() const { return std::get<std::vector<SearchCall>>(body); }
    const FinalAnswer& final_answer() const { return std::get<FinalAnswer>(body); }
    const SelectAndAnswer& select_and_answer() const { return std::get<SelectAndAnswer>(body); }
};

struct ParseOptions {
    ParseMode mode = ParseMode::strict;
    // Known candidate bindings; a bare entity surface matching one of these
    // (case-insensitive) also gets its entity_ref filled in.
    std::span<const CandidateBinding> bindings = {};
};

// Parses one assistant turn. Throws TagError (with byte offset) on protocol
// violations; see TagErrorKind for the failure classes.
ParsedTurn parse_turn(std::string_view text, Dialect dialect, const ParseOptions& opts = {});

// Canonical rendering; parse_turn(render_turn(t)) == t for valid turns.
// Throws DialectMismatch when an entity-anchored call is rendered as plain.
std::string render_turn(const ParsedTurn& turn, Dialect dialect);

std::string render_search_call(const SearchCall& call, Dialect dialect);

struct Observation {
    std::vector<std::string> sentences;         // annotation-stripped, in order
    std::vector<CandidateBinding> bindings;     // in order of appearance
};

// Extracts "Candidate: [k] Name" annotations from observation text. Accepts
// an optional leading "Observation:" or "Obs:" header line/prefix. Throws
// BindingError if the same index is introduced twice.
Observation parse_observation(std::string_view text);

// "Candidate: [0] A, [1] B" (used in user-turn surface construction).
std::string format_candidate_list(std::span<const CandidateBinding> bindings);

} // namespace evipath::tags
