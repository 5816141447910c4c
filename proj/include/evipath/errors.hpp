#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evipath {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- dataset / file I/O ---

struct IoError : Error { using Error::Error; };

struct ParseError : Error {
    size_t line = 0;
    ParseError(size_t line_no, const std::string& msg)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct SchemaError : Error {
    size_t line = 0;      // 0 when not tied to a file line
    std::string field;    // offending field or id, when known
    SchemaError(std::string field_name, const std::string& msg)
        : Error(msg), field(std::move(field_name)) {}
    SchemaError(size_t line_no, std::string field_name, const std::string& msg)
        : Error("line " + std::to_string(line_no) + ": " + msg),
          line(line_no), field(std::move(field_name)) {}
};

struct EmptyInput : Error { using Error::Error; };
struct KindMismatch : Error { using Error::Error; };

// --- model backends ---

struct BackendUnavailable : Error { using Error::Error; };
struct ContextTooLong : Error { using Error::Error; };
struct MalformedResponse : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// --- tag protocol ---

enum class TagErrorKind {
    unclosed_tag,
    unknown_tag,
    multiple_bodies,
    empty_action_block,
    malformed_search_call,
    stray_text,        // non-ws text outside recognized tags (strict mode)
    duplicate_think,
    incomplete_select, // <select> without a matching <answer>
    malformed_select,  // unparseable index list inside <select>
    missing_body,      // turn carries no action/answer/select/no-info body
};

struct TagError : Error {
    TagErrorKind kind;
    size_t offset; // byte offset into the parsed text
    TagError(TagErrorKind k, size_t off, const std::string& msg)
        : Error(msg + " (at byte " + std::to_string(off) + ")"), kind(k), offset(off) {}
};

struct DialectMismatch : Error { using Error::Error; };

struct BindingError : Error {
    int index = -1;
    BindingError(int idx, const std::string& msg) : Error(msg), index(idx) {}
};

// --- synthesis ---

struct MalformedPlan : Error { using Error::Error; };
struct StepBudgetExceeded : Error { using Error::Error; };
struct EmptyAnswer : Error { using Error::Error; };
struct GroundingError : Error { using Error::Error; };

// --- trajectory assembly ---

struct CountMismatch : Error { using Error::Error; };
struct AnswerMismatch : Error { using Error::Error; };
struct CitationError : Error { using Error::Error; };
struct ObservationMismatch : Error { using Error::Error; };

// --- agent runtime ---

struct IndexMissing : Error { using Error::Error; };
struct UnknownSample : Error { using Error::Error; };
struct UnresolvedEntity : Error { using Error::Error; };

// --- evaluation ---

struct IdMismatch : Error { using Error::Error; };

// --- configuration ---

struct ConfigError : Error { using Error::Error; };

} // namespace evipath
