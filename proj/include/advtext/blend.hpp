#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/errors.hpp"
#include "advtext/rng.hpp"
#include "advtext/spectrum.hpp"
#include "advtext/text.hpp"

// Sentence-level "Frankenstein" generators. Bodies of perturbed variants are
// sentences joined by single spaces; paragraph structure is not kept.

namespace advtext {

namespace detail {

struct Segmented {
  std::vector<std::string> sentences;
  std::optional<std::vector<Provenance>> origins;
};

inline Segmented segment_with_origins(const Article& a) {
  Segmented s{segment_sentences(a.body), std::nullopt};
  s.origins = sentence_origins(a, s.sentences.size());
  return s;
}

/// Copy of `a` with provenance filled in from its label when derivable.
inline Article with_origins(const Article& a, const Segmented& seg) {
  Article out = a;
  out.sentence_provenance = seg.origins;
  return out;
}

inline Article rebuild(const Article& base, const std::vector<std::string>& sentences,
                       std::optional<std::vector<Provenance>> origins) {
  Article out = base;
  out.body = join_sentences(sentences);
  out.sentence_provenance = std::move(origins);
  return out;
}

inline void require_sentences(const Segmented& s, const char* what) {
  if (s.sentences.empty())
    throw PreconditionError(std::string(what) + " body has no sentences");
}

struct PendingInsert {
  std::string sentence;
  std::size_t source_index;
  std::optional<Provenance> origin;
};

/// Inserts `inserts` one per step into the growing article. The gap for
/// step k is the head of shuffle(current gap count) drawn from
/// rng.fork(k), so each step's draw depends only on (seed, k).
inline Spectrum insertion_spectrum(const Article& target, const Segmented& seg,
                                   const std::vector<PendingInsert>& inserts,
                                   const SeededRng& rng, SpectrumMode mode) {
  Spectrum sp;
  sp.base = with_origins(target, seg);
  sp.mode = mode;
  sp.seed = rng.seed();
  sp.base_units = seg.sentences.size();
  sp.variants.push_back({sp.base, 0.0, 0, {}});

  auto sentences = seg.sentences;
  auto origins = seg.origins;
  const bool track = origins.has_value() &&
                     std::all_of(inserts.begin(), inserts.end(),
                                 [](const auto& p) { return p.origin.has_value(); });
  if (!track) origins.reset();

  const std::size_t t = seg.sentences.size();
  for (std::size_t k = 1; k <= inserts.size(); ++k) {
    SeededRng step_rng = rng.fork(k);
    const std::size_t gap = shuffle(sentences.size() + 1, step_rng).front();
    const auto& ins = inserts[k - 1];
    sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(gap), ins.sentence);
    if (origins)
      origins->insert(origins->begin() + static_cast<std::ptrdiff_t>(gap), *ins.origin);
    sp.variants.push_back({rebuild(target, sentences, origins),
                           static_cast<double>(k) / static_cast<double>(t + k), k,
                           {Splice{gap, ins.source_index}}});
  }
  return sp;
}

}  // namespace detail

/// Variant k replaces the first k slots of a seeded permutation of target
/// sentences with the first k sentences of a seeded permutation of source
/// sentences. Stops at min(target, source) sentence count.
inline Spectrum substitute_spectrum(const Article& target, const Article& source,
                                    SeededRng& rng) {
  const auto tseg = detail::segment_with_origins(target);
  const auto sseg = detail::segment_with_origins(source);
  detail::require_sentences(tseg, "target");
  detail::require_sentences(sseg, "source");
  const std::size_t t = tseg.sentences.size();
  const auto seed = rng.seed();
  const auto target_perm = shuffle(t, rng);
  const auto source_perm = shuffle(sseg.sentences.size(), rng);
  const std::size_t steps = std::min(t, sseg.sentences.size());

  Spectrum sp;
  sp.base = detail::with_origins(target, tseg);
  sp.mode = SpectrumMode::substitute;
  sp.seed = seed;
  sp.base_units = t;
  sp.variants.push_back({sp.base, 0.0, 0, {}});

  auto sentences = tseg.sentences;
  std::optional<std::vector<Provenance>> origins;
  if (tseg.origins && sseg.origins) origins = tseg.origins;
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::size_t slot = target_perm[k - 1];
    const std::size_t src = source_perm[k - 1];
    sentences[slot] = sseg.sentences[src];
    if (origins) (*origins)[slot] = (*sseg.origins)[src];
    sp.variants.push_back({detail::rebuild(target, sentences, origins),
                           static_cast<double>(k) / static_cast<double>(t), k,
                           {Splice{slot, src}}});
  }
  return sp;
}

/// Variant k inserts the first k sentences of a seeded source permutation
/// at seeded gaps; target sentences are never removed. fraction = k/(T+k).
inline Spectrum insert_spectrum(const Article& target, const Article& source,
                                SeededRng& rng) {
  const auto tseg = detail::segment_with_origins(target);
  const auto sseg = detail::segment_with_origins(source);
  detail::require_sentences(tseg, "target");
  detail::require_sentences(sseg, "source");
  const SeededRng campaign = rng;
  const auto source_perm = shuffle(sseg.sentences.size(), rng);
  const std::size_t steps = std::min(tseg.sentences.size(), sseg.sentences.size());

  std::vector<detail::PendingInsert> inserts;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t src = source_perm[k];
    inserts.push_back({sseg.sentences[src], src,
                       sseg.origins ? std::optional((*sseg.origins)[src])
                                    : std::nullopt});
  }
  return detail::insertion_spectrum(target, tseg, inserts, campaign,
                                    SpectrumMode::insert);
}

/// T+1 variants; variant p has `sentence` inserted at gap p.
inline Spectrum position_sweep(const Article& target, const std::string& sentence,
                               Provenance origin = Provenance::machine) {
  if (trim(sentence).empty())
    throw PreconditionError("position sweep needs a non-empty sentence");
  const auto tseg = detail::segment_with_origins(target);
  detail::require_sentences(tseg, "target");
  const std::size_t t = tseg.sentences.size();
  const std::string inserted = normalize_whitespace(sentence);

  Spectrum sp;
  sp.base = detail::with_origins(target, tseg);
  sp.mode = SpectrumMode::position;
  sp.base_units = t;
  for (std::size_t p = 0; p <= t; ++p) {
    auto sentences = tseg.sentences;
    sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(p), inserted);
    auto origins = tseg.origins;
    if (origins) origins->insert(origins->begin() + static_cast<std::ptrdiff_t>(p), origin);
    sp.variants.push_back({detail::rebuild(target, sentences, std::move(origins)),
                           1.0 / static_cast<double>(t + 1), p,
                           {Splice{p, std::nullopt}}});
  }
  return sp;
}

/// Variant k (1..T) is the first k sentences in original order.
inline Spectrum length_sweep(const Article& target) {
  const auto tseg = detail::segment_with_origins(target);
  detail::require_sentences(tseg, "target");
  const std::size_t t = tseg.sentences.size();

  Spectrum sp;
  sp.base = detail::with_origins(target, tseg);
  sp.mode = SpectrumMode::length;
  sp.base_units = t;
  for (std::size_t k = 1; k <= t; ++k) {
    std::vector<std::string> prefix(tseg.sentences.begin(),
                                    tseg.sentences.begin() + static_cast<std::ptrdiff_t>(k));
    std::optional<std::vector<Provenance>> origins;
    if (tseg.origins)
      origins.emplace(tseg.origins->begin(),
                      tseg.origins->begin() + static_cast<std::ptrdiff_t>(k));
    sp.variants.push_back({detail::rebuild(target, prefix, std::move(origins)),
                           static_cast<double>(k) / static_cast<double>(t), k,
                           {Splice{k - 1, std::nullopt}}});
  }
  return sp;
}

}  // namespace advtext
