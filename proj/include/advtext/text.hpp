#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace advtext {

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

inline bool starts_with_at(std::string_view s, std::size_t pos,
                           std::string_view needle) {
  return s.substr(pos, needle.size()) == needle;
}

// Closing quote or bracket that may trail the terminal punctuation.
// Returns its byte length, or 0.
inline std::size_t closer_len(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_at(s, pos, "”") || starts_with_at(s, pos, "’"))
    return 3;
  return 0;
}

inline bool opens_sentence(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return false;
  const char c = s[pos];
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
  if (c == '"' || c == '\'') return true;
  return starts_with_at(s, pos, "“") || starts_with_at(s, pos, "‘");
}

inline constexpr std::array<std::string_view, 10> kAbbreviations = {
    "Mr.", "Mrs.", "Dr.", "U.S.", "St.", "Inc.", "No.", "vs.", "e.g.", "i.e."};

// Word ending at `end` (exclusive) with any opening quote/paren removed.
inline bool is_abbreviation(std::string_view s, std::size_t begin,
                            std::size_t end) {
  std::size_t word_begin = end;
  while (word_begin > begin && s[word_begin - 1] != ' ') --word_begin;
  std::string_view word = s.substr(word_begin, end - word_begin);
  while (!word.empty() &&
         (word.front() == '"' || word.front() == '\'' || word.front() == '(')) {
    word.remove_prefix(1);
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
         kAbbreviations.end();
}

}  // namespace detail

/// Collapses every whitespace run to a single space and trims both ends.
inline std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && detail::is_space(s[b])) ++b;
  while (e > b && detail::is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Rule-based sentence splitter. A boundary is a run of [.?!] (optionally
/// followed by closing quotes/brackets), then whitespace, then an uppercase
/// ASCII letter, digit or opening quote. A '.' that ends one of the fixed
/// abbreviations never terminates a sentence. Segments are whitespace
/// normalized, so joining them with single spaces reproduces
/// normalize_whitespace(text).
inline std::vector<std::string> segment_sentences(std::string_view text) {
  const std::string norm = normalize_whitespace(text);
  const std::string_view s = norm;
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!detail::is_terminal(s[i])) {
      ++i;
      continue;
    }
    std::size_t last = i;
    while (last + 1 < s.size() && detail::is_terminal(s[last + 1])) ++last;
    std::size_t end = last + 1;
    while (std::size_t n = detail::closer_len(s, end)) end += n;
    const bool boundary = end < s.size() && s[end] == ' ' &&
                          detail::opens_sentence(s, end + 1) &&
                          !(last == i && s[i] == '.' &&
                            detail::is_abbreviation(s, start, i + 1));
    if (boundary) {
      out.emplace_back(s.substr(start, end - start));
      start = end + 1;
      i = start;
    } else {
      i = end;
    }
  }
  if (start < s.size()) out.emplace_back(s.substr(start));
  return out;
}

/// Splits on newline runs; pieces are trimmed and empty ones dropped.
inline std::vector<std::string> segment_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string piece = trim(text.substr(pos, nl - pos));
    if (!piece.empty()) out.push_back(std::move(piece));
    pos = nl + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

inline std::string join_sentences(const std::vector<std::string>& sentences) {
  return join(sentences, " ");
}

inline std::string join_paragraphs(const std::vector<std::string>& paragraphs) {
  return join(paragraphs, "\n");
}

}  // namespace advtext
