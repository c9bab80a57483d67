// SPDX-License-Identifier: Apache-2.0

#include "arguagent/markers.hpp"

#include <cctype>

#include "arguagent/error.hpp"

namespace arguagent::markers {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// U+2018 / U+2019 as UTF-8
bool curly_apostrophe(std::string_view text, std::size_t i) {
  return i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
         static_cast<unsigned char>(text[i + 1]) == 0x80 &&
         (static_cast<unsigned char>(text[i + 2]) == 0x98 ||
          static_cast<unsigned char>(text[i + 2]) == 0x99);
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  Token current{{}, 0, 0};
  std::vector<std::size_t> widths;  // source bytes behind each char of current.text
  bool open = false;
  const auto flush = [&](std::size_t end) {
    if (!open) return;
    current.end = end;
    // quotes around a word are not part of it
    std::size_t front = 0;
    while (front < current.text.size() && current.text[front] == '\'') current.begin += widths[front++];
    std::size_t back = current.text.size();
    while (back > front && current.text[back - 1] == '\'') current.end -= widths[--back];
    current.text = current.text.substr(front, back - front);
    if (!current.text.empty()) tokens.push_back(current);
    open = false;
  };

  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t width = 1;
    char normalized = 0;
    bool word = false;
    if (curly_apostrophe(text, i)) {
      width = 3;
      normalized = '\'';
      word = true;
    } else if (c < 0x80) {
      word = std::isalnum(c) != 0 || c == '\'';
      normalized = static_cast<char>(std::tolower(c));
    } else {
      // other non-ASCII scalars are kept inside words verbatim
      width = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      word = true;
    }
    if (word) {
      if (!open) {
        current = Token{{}, i, i};
        widths.clear();
        open = true;
      }
      if (normalized != 0) {
        current.text.push_back(normalized);
        widths.push_back(width);
      } else {
        current.text.append(text.substr(i, width));
        widths.insert(widths.end(), width, 1);
      }
      current.end = i + width;
    } else {
      flush(i);
    }
    i += width;
  }
  flush(text.size());
  return tokens;
}

Pattern::Pattern(std::string_view source) : source_(source) {
  std::size_t i = 0;
  while (i < source.size()) {
    while (i < source.size() && is_space(source[i])) ++i;
    std::size_t j = i;
    while (j < source.size() && !is_space(source[j])) ++j;
    if (j > i) {
      std::string word(source.substr(i, j - i));
      Term term;
      if (word == "..." || word == "…") {
        term.gap = true;
      } else {
        for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (word.size() > 1 && word.back() == '*') {
          term.prefix = true;
          word.pop_back();
        }
        term.word = std::move(word);
      }
      terms_.push_back(std::move(term));
    }
    i = j;
  }
  if (terms_.empty() || terms_.front().gap || terms_.back().gap) {
    throw Error(ErrorKind::InvalidArgument, "invalid marker pattern '" + source_ + "'");
  }
}

bool Pattern::match_from(std::span<const Token> tokens, std::size_t term, std::size_t at,
                         std::size_t& last) const {
  if (term == terms_.size()) return true;
  const Term& t = terms_[term];
  if (t.gap) {
    for (std::size_t k = at; k < tokens.size(); ++k) {
      if (match_from(tokens, term + 1, k, last)) return true;
    }
    return false;
  }
  if (at >= tokens.size()) return false;
  const std::string& w = tokens[at].text;
  const bool hit = t.prefix ? w.compare(0, t.word.size(), t.word) == 0 : w == t.word;
  if (!hit) return false;
  last = at;
  return match_from(tokens, term + 1, at + 1, last);
}

std::optional<Match> Pattern::find(std::span<const Token> tokens) const {
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    std::size_t last = start;
    if (match_from(tokens, 0, start, last)) return Match{start, last};
  }
  return std::nullopt;
}

std::optional<SetMatch> find_first(std::span<const Pattern> patterns,
                                   std::span<const Token> tokens) {
  std::optional<SetMatch> best;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    const auto m = patterns[p].find(tokens);
    if (m && (!best || m->first_token < best->match.first_token)) best = SetMatch{p, *m};
  }
  return best;
}

std::vector<Pattern> compile(std::span<const std::string> sources) {
  std::vector<Pattern> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.emplace_back(s);
  return out;
}

ByteRange sentence_at(std::string_view text, std::size_t pos) {
  const auto ends_sentence = [&](std::size_t i) {
    const char c = text[i];
    return (c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1]));
  };
  std::size_t begin = pos;
  while (begin > 0 && !ends_sentence(begin - 1)) --begin;
  std::size_t end = pos;
  while (end < text.size() && !ends_sentence(end)) ++end;
  if (end < text.size()) ++end;  // keep the terminator
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return {begin, end};
}

}  // namespace arguagent::markers
