#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/blend.hpp"
#include "advtext/errors.hpp"
#include "advtext/rng.hpp"
#include "advtext/spectrum.hpp"
#include "advtext/text.hpp"
#include "json.hpp"

namespace advtext {

namespace detail {

inline std::size_t leading_punct(std::string_view w) {
  std::size_t n = 0;
  while (n < w.size()) {
    if (std::ispunct(static_cast<unsigned char>(w[n]))) {
      ++n;
    } else if (starts_with_at(w, n, "“") || starts_with_at(w, n, "‘") ||
               starts_with_at(w, n, "”") || starts_with_at(w, n, "’")) {
      n += 3;
    } else {
      break;
    }
  }
  return n;
}

inline std::size_t trailing_punct(std::string_view w) {
  std::size_t n = 0;
  while (n < w.size()) {
    const std::size_t end = w.size() - n;
    if (std::ispunct(static_cast<unsigned char>(w[end - 1]))) {
      ++n;
    } else if (end >= 3 && (w.substr(end - 3, 3) == "”" || w.substr(end - 3, 3) == "’" ||
                            w.substr(end - 3, 3) == "“" || w.substr(end - 3, 3) == "‘")) {
      n += 3;
    } else {
      break;
    }
  }
  return n;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// A whitespace-delimited word split into punctuation prefix, core, suffix.
struct WordParts {
  std::string_view prefix, core, suffix;
};

inline WordParts split_word(std::string_view w) {
  const std::size_t lead = leading_punct(w);
  if (lead >= w.size()) return {w, {}, {}};
  const std::size_t trail = trailing_punct(w.substr(lead));
  return {w.substr(0, lead), w.substr(lead, w.size() - lead - trail),
          w.substr(w.size() - trail)};
}

inline std::vector<std::string_view> whitespace_words(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > b) out.push_back(text.substr(b, i - b));
  }
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Lowercase lemma -> synonyms. Self-synonyms, duplicates and multi-word
/// entries are dropped on construction so substitution never changes the
/// word count.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;
  explicit SynonymLexicon(const std::map<std::string, std::vector<std::string>>& raw) {
    for (const auto& [key, syns] : raw) {
      const std::string k = detail::to_lower_ascii(key);
      auto& list = entries_[k];
      for (const auto& s : syns) {
        if (s.empty() || detail::to_lower_ascii(s) == k) continue;
        if (std::any_of(s.begin(), s.end(), detail::is_space)) continue;
        if (std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
      }
      if (list.empty()) entries_.erase(k);
    }
  }

  const std::vector<std::string>* find(std::string_view lowercase_word) const {
    auto it = entries_.find(std::string(lowercase_word));
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

/// Lowercase term -> subjectivity weight in [0, 1].
class SubjectivityLexicon {
 public:
  SubjectivityLexicon() = default;
  explicit SubjectivityLexicon(const std::map<std::string, double>& raw) {
    for (const auto& [term, w] : raw) {
      if (!(w >= 0.0 && w <= 1.0))
        throw ParseError("subjectivity weight for '" + term + "' outside [0,1]");
      weights_[detail::to_lower_ascii(term)] = w;
    }
  }

  std::optional<double> weight(std::string_view lowercase_term) const {
    auto it = weights_.find(std::string(lowercase_term));
    if (it == weights_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, double> weights_;
};

inline SynonymLexicon load_synonyms(const std::string& path) {
  const auto j = detail::read_json_file(path);
  if (!j.is_object()) throw ParseError(path + ": synonym lexicon must be an object");
  try {
    return SynonymLexicon(j.get<std::map<std::string, std::vector<std::string>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline SubjectivityLexicon load_subjectivity(const std::string& path) {
  const auto j = detail::read_json_file(path);
  if (!j.is_object()) throw ParseError(path + ": subjectivity lexicon must be an object");
  try {
    return SubjectivityLexicon(j.get<std::map<std::string, double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Mean weight of the lexicon terms found in `sentence`; 0 when none match.
inline double sentence_subjectivity(std::string_view sentence,
                                    const SubjectivityLexicon& lex) {
  double sum = 0.0;
  std::size_t matched = 0;
  for (auto word : detail::whitespace_words(sentence)) {
    const auto core = detail::split_word(word).core;
    if (core.empty()) continue;
    if (auto w = lex.weight(detail::to_lower_ascii(core))) {
      sum += *w;
      ++matched;
    }
  }
  return matched ? std::clamp(sum / static_cast<double>(matched), 0.0, 1.0) : 0.0;
}

enum class SubjectivityMode { by_sentences, whole };

inline double article_subjectivity(const Article& a, const SubjectivityLexicon& lex,
                                   SubjectivityMode mode) {
  if (mode == SubjectivityMode::whole) return sentence_subjectivity(a.body, lex);
  const auto sentences = segment_sentences(a.body);
  if (sentences.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sentences) sum += sentence_subjectivity(s, lex);
  return sum / static_cast<double>(sentences.size());
}

enum class SortOrder { asc, desc };

/// Inserts every source sentence, one per step, in order of subjectivity
/// (ties by source index); desc is the reverse of the asc list. Gaps follow
/// the same per-step seeded rule as insert_spectrum.
inline Spectrum subjectivity_ordered_insertion(const Article& target,
                                               const Article& source,
                                               const SubjectivityLexicon& lex,
                                               SortOrder order, const SeededRng& rng) {
  const auto tseg = detail::segment_with_origins(target);
  const auto sseg = detail::segment_with_origins(source);
  detail::require_sentences(tseg, "target");
  detail::require_sentences(sseg, "source");

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < sseg.sentences.size(); ++i)
    scored.emplace_back(sentence_subjectivity(sseg.sentences[i], lex), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (order == SortOrder::desc) std::reverse(scored.begin(), scored.end());

  std::vector<detail::PendingInsert> inserts;
  for (const auto& [score, i] : scored) {
    inserts.push_back({sseg.sentences[i], i,
                       sseg.origins ? std::optional((*sseg.origins)[i]) : std::nullopt});
  }
  return detail::insertion_spectrum(target, tseg, inserts, rng,
                                    order == SortOrder::asc
                                        ? SpectrumMode::subjectivity_asc
                                        : SpectrumMode::subjectivity_desc);
}

/// Cumulative one-word-per-step synonym swaps at seeded positions. Only
/// words whose stripped lowercase form has a lexicon entry are candidates;
/// each is swapped at most once, always with its first synonym. Leading
/// capitalization and surrounding punctuation are kept.
inline Spectrum synonym_spectrum(const Article& target, const SynonymLexicon& lex,
                                 SeededRng& rng) {
  const auto tseg = detail::segment_with_origins(target);
  Spectrum sp;
  sp.base = detail::with_origins(target, tseg);
  sp.mode = SpectrumMode::synonym;
  sp.seed = rng.seed();
  sp.variants.push_back({sp.base, 0.0, 0, {}});

  // Keep the original inter-word whitespace so only the swapped word moves.
  std::vector<std::string> words;
  std::vector<std::string> gaps;  // gaps[i] precedes words[i]; one trailing
  {
    std::string_view body = target.body;
    std::size_t i = 0;
    while (i <= body.size()) {
      const std::size_t g = i;
      while (i < body.size() && detail::is_space(body[i])) ++i;
      gaps.emplace_back(body.substr(g, i - g));
      if (i >= body.size()) break;
      const std::size_t b = i;
      while (i < body.size() && !detail::is_space(body[i])) ++i;
      words.emplace_back(body.substr(b, i - b));
    }
  }
  sp.base_units = words.size();

  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto core = detail::split_word(words[i]).core;
    if (!core.empty() && lex.find(detail::to_lower_ascii(core))) remaining.push_back(i);
  }

  const std::size_t candidates = remaining.size();
  for (std::size_t k = 1; k <= candidates; ++k) {
    const auto pick = static_cast<std::size_t>(rng.below(remaining.size()));
    const std::size_t pos = remaining[pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));

    const auto parts = detail::split_word(words[pos]);
    std::string replacement = lex.find(detail::to_lower_ascii(parts.core))->front();
    if (std::isupper(static_cast<unsigned char>(parts.core.front())))
      replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    words[pos] = std::string(parts.prefix) + replacement + std::string(parts.suffix);

    std::string body;
    for (std::size_t i = 0; i < words.size(); ++i) body += gaps[i] + words[i];
    body += gaps.back();

    Article v = target;
    v.body = std::move(body);
    v.sentence_provenance = sentence_origins(sp.base, segment_sentences(v.body).size());
    sp.variants.push_back({std::move(v),
                           static_cast<double>(k) / static_cast<double>(words.size()), k,
                           {Splice{pos, std::nullopt}}});
  }
  return sp;
}

}  // namespace advtext
