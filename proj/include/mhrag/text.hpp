#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mhrag::text {

/// Decoded UTF-8 code point plus its byte offset in the source string.
struct CodePoint {
    char32_t value;
    std::size_t offset;
    std::size_t length;
};

bool is_valid_utf8(std::string_view s);

/// Decodes UTF-8; malformed sequences decode as U+FFFD one byte at a time.
std::vector<CodePoint> decode_utf8(std::string_view s);

void append_utf8(std::string& out, char32_t cp);

/// True for code points that belong inside a token: ASCII alphanumerics and
/// letters/marks of other scripts (including the Indic joiners ZWJ/ZWNJ).
bool is_word_char(char32_t cp);

/// Lowercase, split on non-letter/non-digit boundaries. No stemming, no
/// stopword removal.
std::vector<std::string> tokenize(std::string_view s);

std::string ascii_lower(std::string_view s);

/// Hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a. Stable across platforms, used for feature hashing.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace mhrag::text
