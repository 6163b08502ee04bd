// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace synqa::text {

/// Decodes UTF-8. Malformed sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

/// Number of code points in a UTF-8 string.
std::size_t length(std::string_view utf8);

/// Code-point addressed slice [start, end) of a UTF-8 string.
/// Throws std::out_of_range when the range exceeds the text.
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

/// Byte offsets of every code point boundary; result has length(utf8) + 1 entries.
std::vector<std::size_t> codepoint_offsets(std::string_view utf8);

/// Unicode letter (general category L*) or decimal digit (Nd).
bool is_alnum(char32_t cp);
char32_t to_lower(char32_t cp);

// Character classes as understood by Python 3 `str` methods. The SQuAD
// evaluator is a Python script, so answer normalization has to agree with it.
bool is_py_space(char32_t cp);
bool is_py_word(char32_t cp);
/// Full Unicode lowercase mapping, equivalent to Python's str.lower().
std::u32string py_lower(std::u32string_view s);

/// Splits on runs of Python whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

/// First code-point index at which `needle` occurs in `haystack`, or npos.
std::size_t find_codepoint(std::string_view haystack, std::string_view needle);

}  // namespace synqa::text
