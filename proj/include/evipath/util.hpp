#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace evipath::util {

// FNV-1a 64-bit. Used for scripted-backend fingerprints, corpus digests and
// the deterministic pseudo-embedding seed.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::string hex16(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view ltrim(std::string_view s) {
    size_t i = 0;
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    return s.substr(i);
}

inline std::string_view rtrim(std::string_view s) {
    size_t n = s.size();
    while (n > 0 && is_ascii_space(s[n - 1])) --n;
    return s.substr(0, n);
}

inline std::string_view trim(std::string_view s) { return rtrim(ltrim(s)); }

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

// Splits on '\n'; a trailing newline does not produce an empty final element.
std::vector<std::string> split_lines(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string to_lower_ascii(std::string_view s);

// Reads a whole file; throws IoError if unreadable.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Calls fn(line_number, parsed_json) for every non-blank line. Line numbers
// are 1-based. JSON errors become ParseError with the line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(size_t, const nlohmann::ordered_json&)>& fn);

// Appends one compact JSON document plus '\n'.
void append_jsonl(std::ostream& os, const nlohmann::ordered_json& doc);

// Milliseconds since the Unix epoch.
int64_t now_ms();

} // namespace evipath::util
