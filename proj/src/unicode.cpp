#include "evipath/unicode.hpp"

#include "evipath/errors.hpp"
#include "evipath/util.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <vector>

namespace evipath::unicode {

size_t decode_utf8(std::string_view s, size_t i, char32_t& cp) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        cp = b0;
        return i + 1;
    }
    size_t len = 0;
    char32_t value = 0;
    if ((b0 & 0xe0) == 0xc0) { len = 2; value = b0 & 0x1f; }
    else if ((b0 & 0xf0) == 0xe0) { len = 3; value = b0 & 0x0f; }
    else if ((b0 & 0xf8) == 0xf0) { len = 4; value = b0 & 0x07; }
    else { cp = 0xFFFD; return i + 1; }
    if (i + len > s.size()) { cp = 0xFFFD; return i + 1; }
    for (size_t k = 1; k < len; ++k) {
        unsigned char b = byte(i + k);
        if ((b & 0xc0) != 0x80) { cp = 0xFFFD; return i + 1; }
        value = (value << 6) | (b & 0x3f);
    }
    // Reject overlong encodings and surrogates.
    if ((len == 2 && value < 0x80) || (len == 3 && value < 0x800) ||
        (len == 4 && value < 0x10000) || (value >= 0xD800 && value <= 0xDFFF) ||
        value > 0x10FFFF) {
        cp = 0xFFFD;
        return i + 1;
    }
    cp = value;
    return i + len;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

std::string nfc(std::string_view utf8) {
    UErrorCode ec = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&ec);
    if (U_FAILURE(ec)) throw Error("ICU NFC instance unavailable");

    // UTF-8 -> UTF-16 (substituting U+FFFD for bad sequences).
    std::vector<UChar> u16(utf8.size() + 1);
    int32_t u16_len = 0;
    ec = U_ZERO_ERROR;
    u_strFromUTF8WithSub(u16.data(), static_cast<int32_t>(u16.size()), &u16_len,
                         utf8.data(), static_cast<int32_t>(utf8.size()), 0xFFFD,
                         nullptr, &ec);
    if (U_FAILURE(ec)) throw Error("UTF-8 decode failed");

    std::vector<UChar> out16(static_cast<size_t>(u16_len) * 3 + 16);
    ec = U_ZERO_ERROR;
    int32_t out_len = unorm2_normalize(norm, u16.data(), u16_len, out16.data(),
                                       static_cast<int32_t>(out16.size()), &ec);
    if (ec == U_BUFFER_OVERFLOW_ERROR) {
        out16.resize(static_cast<size_t>(out_len) + 1);
        ec = U_ZERO_ERROR;
        out_len = unorm2_normalize(norm, u16.data(), u16_len, out16.data(),
                                   static_cast<int32_t>(out16.size()), &ec);
    }
    if (U_FAILURE(ec)) throw Error("NFC normalization failed");

    std::string out(static_cast<size_t>(out_len) * 3 + 16, '\0');
    int32_t out8_len = 0;
    ec = U_ZERO_ERROR;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &out8_len,
                out16.data(), out_len, &ec);
    if (ec == U_BUFFER_OVERFLOW_ERROR) {
        out.resize(static_cast<size_t>(out8_len));
        ec = U_ZERO_ERROR;
        u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &out8_len,
                    out16.data(), out_len, &ec);
    }
    if (U_FAILURE(ec)) throw Error("UTF-8 encode failed");
    out.resize(static_cast<size_t>(out8_len));
    return out;
}

std::string dedup_key(std::string_view utf8) {
    std::string composed = nfc(utf8);
    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    size_t i = 0;
    while (i < composed.size()) {
        char32_t cp;
        i = decode_utf8(composed, i, cp);
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        encode_utf8(cp, out);
    }
    return out;
}

bool is_punct_or_symbol(char32_t cp) {
    return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & (U_GC_P_MASK | U_GC_S_MASK)) != 0;
}

bool is_space(char32_t cp) {
    if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v')
        return true;
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

char32_t to_lower(char32_t cp) {
    return static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
}

} // namespace evipath::unicode
