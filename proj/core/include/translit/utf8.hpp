#pragma once

#include <string>

namespace translit {

// Strict UTF-8 decode; rejects overlong forms, surrogates and truncation
// with EncodingError.
std::u32string decode_utf8(const std::string &bytes);

std::string encode_utf8(const std::u32string &codepoints);
std::string encode_utf8(char32_t codepoint);

} // namespace translit
