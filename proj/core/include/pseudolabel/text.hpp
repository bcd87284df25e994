#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pseudolabel::text {

bool is_valid_utf8(std::string_view bytes);

// Byte offset of the first invalid UTF-8 sequence, or npos.
std::size_t first_invalid_utf8(std::string_view bytes);

// Unicode White_Space property (the 25 code points of PropList.txt).
bool is_unicode_space(char32_t cp);

// Length in bytes of the whitespace code point starting at `pos`, 0 if the
// code point there is not whitespace (or is malformed).
std::size_t whitespace_length(std::string_view s, std::size_t pos);

// Simple one-to-one lowercase mapping for ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic. Other code points and malformed bytes pass through.
std::string to_lower(std::string_view s);

// Splits on Unicode whitespace; empty tokens are never produced.
std::vector<std::string_view> split_whitespace(std::string_view s);

}  // namespace pseudolabel::text
