#pragma once

#include <string>
#include <string_view>

namespace evipath::unicode {

// Canonical composition (NFC) of a UTF-8 string. Invalid byte sequences are
// replaced with U+FFFD.
std::string nfc(std::string_view utf8);

// Dedup key for corpus construction: NFC, then every whitespace run collapsed
// to a single space, trimmed at both ends.
std::string dedup_key(std::string_view utf8);

// True for Unicode general categories P* (punctuation) and S* (symbols).
bool is_punct_or_symbol(char32_t cp);

// True for Unicode whitespace (ASCII space/tab/newlines plus Zs/Zl/Zp).
bool is_space(char32_t cp);

// Simple (code-point) lowercase mapping.
char32_t to_lower(char32_t cp);

// Decodes one code point starting at byte i; stores it in cp and returns the
// index of the next code point. Malformed input yields U+FFFD and advances by
// one byte.
size_t decode_utf8(std::string_view s, size_t i, char32_t& cp);

void encode_utf8(char32_t cp, std::string& out);

} // namespace evipath::unicode
