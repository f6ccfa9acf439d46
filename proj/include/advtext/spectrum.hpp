#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/errors.hpp"
#include "json.hpp"

namespace advtext {

enum class SpectrumMode {
  substitute,
  insert,
  position,
  length,
  subjectivity_asc,
  subjectivity_desc,
  synonym,
  generator_sentence,
  generator_paragraph,
  embedding,
};

inline constexpr std::string_view to_string(SpectrumMode m) {
  switch (m) {
    case SpectrumMode::substitute: return "substitute";
    case SpectrumMode::insert: return "insert";
    case SpectrumMode::position: return "position";
    case SpectrumMode::length: return "length";
    case SpectrumMode::subjectivity_asc: return "subjectivity_asc";
    case SpectrumMode::subjectivity_desc: return "subjectivity_desc";
    case SpectrumMode::synonym: return "synonym";
    case SpectrumMode::generator_sentence: return "generator_sentence";
    case SpectrumMode::generator_paragraph: return "generator_paragraph";
    case SpectrumMode::embedding: return "embedding";
  }
  return "substitute";
}

inline SpectrumMode parse_mode(std::string_view s) {
  for (auto m : {SpectrumMode::substitute, SpectrumMode::insert,
                 SpectrumMode::position, SpectrumMode::length,
                 SpectrumMode::subjectivity_asc, SpectrumMode::subjectivity_desc,
                 SpectrumMode::synonym, SpectrumMode::generator_sentence,
                 SpectrumMode::generator_paragraph, SpectrumMode::embedding}) {
    if (to_string(m) == s) return m;
  }
  throw ParseError("unknown attack mode '" + std::string(s) + "'");
}

/// One edit applied at a step. `position` is the unit slot (substitute),
/// gap (insert/position), word index (synonym) or replaced unit (generator);
/// `source` is the source sentence index or generator seed unit.
struct Splice {
  std::size_t position = 0;
  std::optional<std::size_t> source;
  bool operator==(const Splice&) const = default;
};

struct Variant {
  Article article;
  double fraction = 0.0;
  std::size_t step = 0;
  /// Edits performed at this step only; earlier steps' edits are implied.
  std::vector<Splice> splices;
};

struct Spectrum {
  Article base;
  SpectrumMode mode = SpectrumMode::substitute;
  std::uint64_t seed = 0;
  std::vector<Variant> variants;
  /// Units of the base that fractions are measured against.
  std::size_t base_units = 0;
};

inline nlohmann::json splices_to_json(const std::vector<Splice>& splices) {
  auto arr = nlohmann::json::array();
  for (const auto& s : splices) {
    nlohmann::json j{{"position", s.position}};
    j["source"] = s.source ? nlohmann::json(*s.source) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Splice log keyed by step, for the spectrum manifest.
inline nlohmann::json splice_log(const Spectrum& s) {
  auto log = nlohmann::json::array();
  for (const auto& v : s.variants)
    log.push_back({{"step", v.step}, {"splices", splices_to_json(v.splices)}});
  return log;
}

}  // namespace advtext
