// SPDX-License-Identifier: Apache-2.0

#include "arguagent/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "arguagent/error.hpp"

namespace arguagent::unicode {

namespace {

// Returns the byte length of the scalar starting at `i`, or 0 when the
// sequence at `i` is not well-formed UTF-8.
std::size_t scalar_width(std::string_view s, std::size_t i, UChar32* out = nullptr) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  auto pos = static_cast<int32_t>(i);
  UChar32 c = 0;
  U8_NEXT(bytes, pos, length, c);
  if (c < 0) return 0;
  if (out != nullptr) *out = c;
  return static_cast<std::size_t>(pos) - i;
}

}  // namespace

bool valid_utf8(std::string_view utf8) {
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto w = scalar_width(utf8, i);
    if (w == 0) return false;
    i += w;
  }
  return true;
}

std::string nfc(std::string_view utf8) {
  if (!valid_utf8(utf8)) throw Error(ErrorKind::ParseError, "text is not valid UTF-8");
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorKind::Io, "ICU NFC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) return std::string(utf8);
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw Error(ErrorKind::ParseError, "NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string trim_trailing(std::string_view utf8) {
  std::size_t keep = 0;
  std::size_t i = 0;
  while (i < utf8.size()) {
    UChar32 c = 0;
    const auto w = scalar_width(utf8, i, &c);
    if (w == 0) throw Error(ErrorKind::ParseError, "text is not valid UTF-8");
    i += w;
    if (!u_isUWhiteSpace(c)) keep = i;
  }
  return std::string(utf8.substr(0, keep));
}

std::size_t scalar_length(std::string_view utf8) {
  return scalar_offset(utf8, utf8.size());
}

std::size_t scalar_offset(std::string_view utf8, std::size_t byte_offset) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < byte_offset && i < utf8.size()) {
    const auto w = scalar_width(utf8, i);
    i += w == 0 ? 1 : w;
    ++count;
  }
  return count;
}

std::size_t byte_offset(std::string_view utf8, std::size_t scalar_index) {
  std::size_t i = 0;
  for (std::size_t n = 0; n < scalar_index && i < utf8.size(); ++n) {
    const auto w = scalar_width(utf8, i);
    i += w == 0 ? 1 : w;
  }
  return i;
}

std::string scalar_substr(std::string_view utf8, std::size_t start, std::size_t end) {
  const auto b = byte_offset(utf8, start);
  const auto e = byte_offset(utf8, end);
  return std::string(utf8.substr(b, e - b));
}

std::optional<ScalarRange> find_scalar(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  const auto pos = haystack.find(needle);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto start = scalar_offset(haystack, pos);
  return ScalarRange{start, start + scalar_length(needle)};
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

}  // namespace arguagent::unicode
