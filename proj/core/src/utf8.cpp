#include "translit/utf8.hpp"

#include "translit/error.hpp"

namespace translit {

std::u32string decode_utf8(const std::string &bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    size_t i = 0;
    const auto fail = [&](const char *msg) -> char32_t {
        throw EncodingError(std::string(msg) + " at byte offset " + std::to_string(i));
    };
    while (i < bytes.size()) {
        unsigned char b0 = static_cast<unsigned char>(bytes[i]);
        char32_t cp;
        size_t len;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            fail("invalid UTF-8 lead byte");
            return out;
        }
        if (i + len > bytes.size()) fail("truncated UTF-8 sequence");
        for (size_t k = 1; k < len; ++k) {
            unsigned char b = static_cast<unsigned char>(bytes[i + k]);
            if ((b & 0xC0) != 0x80) fail("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (b & 0x3F);
        }
        static const char32_t min_for_len[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < min_for_len[len]) fail("overlong UTF-8 encoding");
        if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate codepoint in UTF-8");
        if (cp > 0x10FFFF) fail("codepoint out of range");
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::string encode_utf8(const std::u32string &codepoints) {
    std::string out;
    out.reserve(codepoints.size());
    for (char32_t cp : codepoints) out += encode_utf8(cp);
    return out;
}

} // namespace translit
