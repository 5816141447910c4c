#include "evipath/tags.hpp"

#include "evipath/errors.hpp"
#include "evipath/util.hpp"

#include <algorithm>
#include <cctype>

namespace evipath::tags {

std::string_view to_string(Dialect dialect) {
    return dialect == Dialect::plain ? "plain" : "entity_anchored";
}

std::optional<Dialect> dialect_from(std::string_view name) {
    if (name == "plain") return Dialect::plain;
    if (name == "entity_anchored") return Dialect::entity_anchored;
    return std::nullopt;
}

namespace {

using util::trim;

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

enum class BlockKind { think, action, answer, select, no_info };

struct Block {
    BlockKind kind;
    std::string content;       // trimmed
    size_t offset;             // byte offset of the opening tag
    size_t content_offset = 0; // byte offset of the first non-ws content byte
};

std::optional<BlockKind> block_kind_for(std::string_view name) {
    if (name == "think") return BlockKind::think;
    if (name == "action") return BlockKind::action;
    if (name == "answer") return BlockKind::answer;
    if (name == "select") return BlockKind::select;
    return std::nullopt;
}

// Matches "<name>" or "</name>" at position i; returns the name (without
// slashes/brackets) and whether it is a closing tag.
struct TagToken {
    std::string_view name;
    bool closing;
    size_t end; // index one past '>'
};

std::optional<TagToken> match_tag(std::string_view text, size_t i) {
    if (i >= text.size() || text[i] != '<') return std::nullopt;
    size_t j = i + 1;
    bool closing = false;
    if (j < text.size() && text[j] == '/') {
        closing = true;
        ++j;
    }
    size_t name_start = j;
    while (j < text.size() && (std::isalpha(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
    if (j == name_start || j >= text.size() || text[j] != '>') return std::nullopt;
    return TagToken{text.substr(name_start, j - name_start), closing, j + 1};
}

int parse_nonneg_int(std::string_view s) {
    if (s.empty() || s.size() > 9) return -1;
    int value = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return -1;
        value = value * 10 + (c - '0');
    }
    return value;
}

SearchCall parse_search_call(std::string_view line, Dialect dialect, const ParseOptions& opts,
                             size_t line_offset) {
    const auto fail = [&](size_t off, const std::string& msg) -> TagError {
        return TagError(TagErrorKind::malformed_search_call, line_offset + off,
                        "malformed Search call: " + msg);
    };

    if (!util::starts_with(line, "Search")) throw fail(0, "expected Search(");
    size_t pos = 6;
    while (pos < line.size() && util::is_ascii_space(line[pos])) ++pos;
    if (pos >= line.size() || line[pos] != '(') throw fail(pos, "expected '('");
    ++pos;

    size_t quote = line.find('"', pos);
    if (quote == std::string_view::npos) throw fail(pos, "missing quoted question");

    SearchCall call;
    call.dialect = dialect;

    std::string_view entity_segment = trim(line.substr(pos, quote - pos));
    if (!entity_segment.empty()) {
        if (entity_segment.back() != ',')
            throw fail(pos, "entity argument must be followed by ','");
        std::string_view token = trim(entity_segment.substr(0, entity_segment.size() - 1));
        if (token.empty()) throw fail(pos, "empty entity argument");
        if (dialect == Dialect::plain) {
            if (opts.mode == ParseMode::strict)
                throw fail(pos, "plain dialect Search takes only a question");
            // lenient: drop the entity argument
        } else if (token.front() == '[' && token.back() == ']') {
            int idx = parse_nonneg_int(trim(token.substr(1, token.size() - 2)));
            if (idx < 0) throw fail(pos, "bad candidate index");
            call.entity_ref = idx;
        } else {
            call.entity_surface = std::string(token);
            for (const auto& b : opts.bindings) {
                if (iequals(b.surface, token)) {
                    call.entity_ref = b.index;
                    break;
                }
            }
        }
    } else if (dialect == Dialect::entity_anchored) {
        if (opts.mode == ParseMode::strict)
            throw fail(pos, "entity-anchored Search requires an entity argument");
        call.dialect = Dialect::plain; // lenient downgrade
    }

    // Quoted question with backslash escaping.
    std::string question;
    size_t i = quote + 1;
    bool closed = false;
    while (i < line.size()) {
        char c = line[i];
        if (c == '\\' && i + 1 < line.size()) {
            question.push_back(line[i + 1]);
            i += 2;
            continue;
        }
        if (c == '"') {
            closed = true;
            ++i;
            break;
        }
        question.push_back(c);
        ++i;
    }
    if (!closed) throw fail(quote, "unterminated question string");
    while (i < line.size() && util::is_ascii_space(line[i])) ++i;
    if (i >= line.size() || line[i] != ')') throw fail(i, "expected ')'");
    ++i;
    if (opts.mode == ParseMode::strict && !trim(line.substr(i)).empty())
        throw fail(i, "trailing text after ')'");
    if (trim(question).empty()) throw fail(quote, "empty question");

    call.question = std::move(question);
    return call;
}

std::vector<int> parse_select_indices(std::string_view content, size_t offset) {
    const auto fail = [&](const std::string& msg) -> TagError {
        return TagError(TagErrorKind::malformed_select, offset, "bad select block: " + msg);
    };
    std::vector<int> out;
    size_t i = 0;
    while (i < content.size()) {
        char c = content[i];
        if (util::is_ascii_space(c) || c == ',') {
            ++i;
            continue;
        }
        if (c != '[') throw fail("expected '['");
        size_t close = content.find(']', i);
        if (close == std::string_view::npos) throw fail("missing ']'");
        int idx = parse_nonneg_int(trim(content.substr(i + 1, close - i - 1)));
        if (idx < 0) throw fail("bad index");
        out.push_back(idx);
        i = close + 1;
    }
    if (out.empty()) throw fail("no indices");
    return out;
}

} // namespace

ParsedTurn parse_turn(std::string_view text, Dialect dialect, const ParseOptions& opts) {
    std::vector<Block> blocks;
    std::optional<std::string> think;
    size_t think_offset = 0;

    size_t i = 0;
    size_t seg_start = 0; // start of the current stray-text segment

    const auto flush_segment = [&](size_t end) {
        std::string_view segment = text.substr(seg_start, end - seg_start);
        std::string_view stripped = trim(segment);
        if (stripped.empty()) return;
        if (stripped == kNoInfoLine) {
            size_t off = seg_start + static_cast<size_t>(stripped.data() - segment.data());
            blocks.push_back({BlockKind::no_info, std::string(stripped), off});
            return;
        }
        if (opts.mode == ParseMode::strict) {
            size_t off = seg_start + static_cast<size_t>(stripped.data() - segment.data());
            throw TagError(TagErrorKind::stray_text, off,
                           "unexpected text outside tags: \"" +
                               std::string(stripped.substr(0, 40)) + "\"");
        }
    };

    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        auto tok = match_tag(text, i);
        if (!tok) {
            ++i; // '<' inside ordinary text
            continue;
        }
        auto kind = block_kind_for(tok->name);
        if (!kind || tok->closing) {
            if (opts.mode == ParseMode::strict) {
                flush_segment(i); // report earlier stray text first
                if (!kind)
                    throw TagError(TagErrorKind::unknown_tag, i,
                                   "unknown tag <" + std::string(tok->name) + ">");
                throw TagError(TagErrorKind::unknown_tag, i,
                               "unexpected closing tag </" + std::string(tok->name) + ">");
            }
            i = tok->end; // lenient: skip it
            continue;
        }
        flush_segment(i);
        std::string close_tag = "</" + std::string(tok->name) + ">";
        size_t close_pos = text.find(close_tag, tok->end);
        if (close_pos == std::string_view::npos)
            throw TagError(TagErrorKind::unclosed_tag, i,
                           "unclosed tag <" + std::string(tok->name) + ">");
        std::string_view raw = text.substr(tok->end, close_pos - tok->end);
        size_t leading_ws = raw.size() - util::ltrim(raw).size();
        std::string content(trim(raw));
        if (*kind == BlockKind::think) {
            if (think)
                throw TagError(TagErrorKind::duplicate_think, i, "more than one <think> block");
            think = std::move(content);
            think_offset = i;
        } else {
            blocks.push_back({*kind, std::move(content), i, tok->end + leading_ws});
        }
        i = close_pos + close_tag.size();
        seg_start = i;
    }
    flush_segment(text.size());
    (void)think_offset;

    // Resolve the body from collected blocks.
    const auto count_of = [&](BlockKind k) {
        return std::count_if(blocks.begin(), blocks.end(),
                             [&](const Block& b) { return b.kind == k; });
    };
    auto n_action = count_of(BlockKind::action);
    auto n_answer = count_of(BlockKind::answer);
    auto n_select = count_of(BlockKind::select);
    auto n_noinfo = count_of(BlockKind::no_info);

    const auto multiple = [&](size_t off, const std::string& msg) -> TagError {
        return TagError(TagErrorKind::multiple_bodies, off, msg);
    };

    ParsedTurn turn;
    turn.think = think;

    if (n_select > 0) {
        if (n_select > 1) throw multiple(blocks.back().offset, "more than one <select> block");
        if (n_action > 0 || n_noinfo > 0)
            throw multiple(blocks.back().offset, "<select> combined with another body");
        if (n_answer == 0) {
            auto it = std::find_if(blocks.begin(), blocks.end(),
                                   [](const Block& b) { return b.kind == BlockKind::select; });
            throw TagError(TagErrorKind::incomplete_select, it->offset,
                           "<select> without an <answer>");
        }
        if (n_answer > 1) throw multiple(blocks.back().offset, "more than one <answer> block");
        SelectAndAnswer body;
        for (const auto& b : blocks) {
            if (b.kind == BlockKind::select)
                body.selected = parse_select_indices(b.content, b.content_offset);
            else if (b.kind == BlockKind::answer)
                body.answer_sentence = b.content;
        }
        turn.body = std::move(body);
        return turn;
    }

    size_t n_bodies = static_cast<size_t>(n_action) + static_cast<size_t>(n_answer) +
                      static_cast<size_t>(n_noinfo);
    if (n_bodies == 0)
        throw TagError(TagErrorKind::missing_body, 0, "turn has no action/answer body");
    if (n_bodies > 1) // both modes: a turn carries exactly one body
        throw multiple(blocks.back().offset, "turn contains more than one body");

    const Block* body_block = &blocks.front();

    switch (body_block->kind) {
    case BlockKind::action: {
        std::vector<SearchCall> calls;
        size_t running = body_block->content_offset;
        for (const auto& raw_line : util::split_lines(body_block->content)) {
            std::string_view line = trim(raw_line);
            if (!line.empty()) {
                size_t lead = static_cast<size_t>(line.data() - raw_line.data());
                calls.push_back(parse_search_call(line, dialect, opts, running + lead));
            }
            running += raw_line.size() + 1;
        }
        if (calls.empty())
            throw TagError(TagErrorKind::empty_action_block, body_block->offset,
                           "empty action block");
        turn.body = std::move(calls);
        break;
    }
    case BlockKind::answer:
        turn.body = FinalAnswer{body_block->content};
        break;
    case BlockKind::no_info:
        turn.body = NoInfo{};
        break;
    default:
        break;
    }
    return turn;
}

std::string render_search_call(const SearchCall& call, Dialect dialect) {
    std::string question;
    question.reserve(call.question.size() + 2);
    for (char c : call.question) {
        if (c == '\\' || c == '"') question.push_back('\\');
        question.push_back(c);
    }
    bool anchored = call.entity_ref.has_value() || call.entity_surface.has_value();
    if (dialect == Dialect::plain) {
        if (anchored)
            throw DialectMismatch("entity-anchored Search call rendered under plain dialect");
        return "Search(\"" + question + "\")";
    }
    if (!anchored) return "Search(\"" + question + "\")";
    if (call.entity_surface)
        return "Search(" + *call.entity_surface + ", \"" + question + "\")";
    return "Search([" + std::to_string(*call.entity_ref) + "], \"" + question + "\")";
}

std::string render_turn(const ParsedTurn& turn, Dialect dialect) {
    std::string out;
    bool inline_think = turn.is_select() || turn.is_no_info();
    if (turn.think) {
        if (inline_think)
            out += "<think> " + *turn.think + " </think>\n";
        else
            out += "<think>\n" + *turn.think + "\n</think>\n";
    }
    if (turn.is_action()) {
        const auto& calls = turn.actions();
        if (dialect == Dialect::plain && calls.size() == 1) {
            out += "<action> " + render_search_call(calls[0], dialect) + " </action>";
        } else {
            out += "<action>\n";
            for (const auto& call : calls) out += render_search_call(call, dialect) + "\n";
            out += "</action>";
        }
    } else if (turn.is_final()) {
        out += "<answer> " + turn.final_answer().text + " </answer>";
    } else if (turn.is_select()) {
        const auto& body = turn.select_and_answer();
        out += "<select>";
        for (int idx : body.selected) out += " [" + std::to_string(idx) + "]";
        out += " </select>\n";
        out += "<answer> " + body.answer_sentence + " </answer>";
    } else {
        out += std::string(kNoInfoLine);
    }
    return out;
}

Observation parse_observation(std::string_view text) {
    Observation obs;
    bool first_content_line = true;
    for (const auto& raw_line : util::split_lines(text)) {
        std::string_view line = trim(raw_line);
        if (line.empty()) continue;
        if (first_content_line) {
            first_content_line = false;
            if (line == "Observation:" || line == "Obs:") continue;
            if (util::starts_with(line, "Observation:"))
                line = util::ltrim(line.substr(12));
            else if (util::starts_with(line, "Obs:"))
                line = util::ltrim(line.substr(4));
        }

        // Split off a trailing "Candidate: [k] Name, [k2] Name2" annotation.
        size_t marker = line.rfind("Candidate:");
        std::string_view sentence = line;
        std::vector<CandidateBinding> line_bindings;
        bool annotated = false;
        if (marker != std::string_view::npos) {
            std::string_view tail = util::ltrim(line.substr(marker + 10));
            // parse entries; on any malformation treat the line as plain text
            std::vector<CandidateBinding> parsed;
            bool ok = !tail.empty();
            size_t i = 0;
            while (ok && i < tail.size()) {
                while (i < tail.size() && (util::is_ascii_space(tail[i]) || tail[i] == ',')) ++i;
                if (i >= tail.size()) break;
                if (tail[i] != '[') { ok = false; break; }
                size_t close = tail.find(']', i);
                if (close == std::string_view::npos) { ok = false; break; }
                int idx = parse_nonneg_int(trim(tail.substr(i + 1, close - i - 1)));
                if (idx < 0) { ok = false; break; }
                i = close + 1;
                // name runs until a ',' that introduces the next '[k]' entry
                size_t name_end = tail.size();
                size_t scan = i;
                while (scan < tail.size()) {
                    if (tail[scan] == ',') {
                        size_t after = scan + 1;
                        while (after < tail.size() && util::is_ascii_space(tail[after])) ++after;
                        if (after < tail.size() && tail[after] == '[') {
                            name_end = scan;
                            break;
                        }
                    }
                    ++scan;
                }
                std::string_view name = trim(tail.substr(i, name_end - i));
                if (name.empty()) { ok = false; break; }
                parsed.push_back({idx, std::string(name)});
                i = name_end;
            }
            if (ok && !parsed.empty()) {
                annotated = true;
                line_bindings = std::move(parsed);
                sentence = util::rtrim(line.substr(0, marker));
            }
        }
        (void)annotated;
        for (auto& b : line_bindings) {
            for (const auto& existing : obs.bindings) {
                if (existing.index == b.index)
                    throw BindingError(b.index, "duplicate candidate index [" +
                                                    std::to_string(b.index) + "]");
            }
            obs.bindings.push_back(std::move(b));
        }
        obs.sentences.emplace_back(sentence);
    }
    return obs;
}

std::string format_candidate_list(std::span<const CandidateBinding> bindings) {
    std::string out = "Candidate:";
    for (size_t i = 0; i < bindings.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += "[" + std::to_string(bindings[i].index) + "] " + bindings[i].surface;
    }
    return out;
}

} // namespace evipath::tags
