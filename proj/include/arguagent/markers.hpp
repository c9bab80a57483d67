// SPDX-License-Identifier: Apache-2.0
//
// Word-level phrase matching used by the heuristic scorer and the stance
// classifier. A pattern is a space-separated sequence of terms: a literal
// word ("all"), a prefix ("deform*"), or a gap ("...") that skips any number
// of words. Matching is ASCII case-insensitive and treats curly apostrophes
// as straight ones.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arguagent::markers {

struct Token {
  std::string text;   // lowercased
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};

std::vector<Token> tokenize(std::string_view text);

struct Match {
  std::size_t first_token;
  std::size_t last_token;  // inclusive
};

class Pattern {
 public:
  /// Throws Error(InvalidArgument) for an empty pattern or one that starts or
  /// ends with a gap.
  explicit Pattern(std::string_view source);

  const std::string& source() const { return source_; }

  /// Leftmost match.
  std::optional<Match> find(std::span<const Token> tokens) const;

 private:
  struct Term {
    std::string word;
    bool prefix = false;
    bool gap = false;
  };
  bool match_from(std::span<const Token> tokens, std::size_t term, std::size_t at,
                  std::size_t& last) const;

  std::string source_;
  std::vector<Term> terms_;
};

/// Leftmost match of any pattern in the set, with the pattern's index.
struct SetMatch {
  std::size_t pattern;
  Match match;
};
std::optional<SetMatch> find_first(std::span<const Pattern> patterns,
                                   std::span<const Token> tokens);

std::vector<Pattern> compile(std::span<const std::string> sources);

/// Byte range [begin, end) of the sentence containing byte `pos`. Sentences
/// end after '.', '!' or '?' followed by whitespace (or at the end of text);
/// surrounding whitespace is excluded.
struct ByteRange {
  std::size_t begin;
  std::size_t end;
};
ByteRange sentence_at(std::string_view text, std::size_t pos);

}  // namespace arguagent::markers
