// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace arguagent::unicode {

/// NFC-normalizes UTF-8 text. Throws Error(ParseError) on invalid UTF-8.
std::string nfc(std::string_view utf8);

/// Removes trailing Unicode whitespace.
std::string trim_trailing(std::string_view utf8);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t scalar_length(std::string_view utf8);

/// Converts a byte offset (on a scalar boundary) into a scalar offset.
std::size_t scalar_offset(std::string_view utf8, std::size_t byte_offset);

/// Byte offset of the scalar with the given index; returns utf8.size() for
/// index == scalar_length(utf8).
std::size_t byte_offset(std::string_view utf8, std::size_t scalar_index);

/// Substring by scalar range [start, end).
std::string scalar_substr(std::string_view utf8, std::size_t start, std::size_t end);

/// First occurrence of `needle` in `haystack`, as a scalar range.
struct ScalarRange {
  std::size_t start;
  std::size_t end;
};
std::optional<ScalarRange> find_scalar(std::string_view haystack, std::string_view needle);

bool valid_utf8(std::string_view utf8);

/// ASCII lowercasing; non-ASCII bytes pass through unchanged.
std::string ascii_lower(std::string_view text);

}  // namespace arguagent::unicode
