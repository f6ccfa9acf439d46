#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/cassette.hpp"
#include "advtext/errors.hpp"
#include "advtext/http.hpp"
#include "advtext/rng.hpp"
#include "advtext/spectrum.hpp"
#include "advtext/text.hpp"
#include "json.hpp"

namespace advtext {

enum class GenerationUnit { sentence, paragraph };

inline GenerationUnit parse_unit(const std::string& s) {
  if (s == "sentence") return GenerationUnit::sentence;
  if (s == "paragraph") return GenerationUnit::paragraph;
  throw ParseError("unknown generation unit '" + s + "'");
}

inline constexpr const char* kGeneratorUrlEnv = "ADVTEXT_GENERATOR_URL";
inline constexpr const char* kGeneratorKeyEnv = "ADVTEXT_GENERATOR_API_KEY";

/// Text-completion service. Wire protocol: POST {base_url}/generate with
/// {"text": seed}; the generation is read from `response_field`, a
/// dot-separated path into the response JSON ("output" by default,
/// "choices.0.text" for list-shaped APIs).
struct GeneratorEndpoint {
  std::string base_url;
  std::optional<std::string> api_key;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  GenerationUnit unit = GenerationUnit::sentence;
  std::string response_field = "output";
  int max_in_flight = 4;

  void validate() const {
    if (timeout.count() <= 0) throw PreconditionError("generator timeout must be > 0");
    if (max_retries < 0) throw PreconditionError("generator max_retries must be >= 0");
    if (max_in_flight < 1) throw PreconditionError("generator max_in_flight must be >= 1");
  }

  static GeneratorEndpoint from_json(const nlohmann::json& j) {
    GeneratorEndpoint ep;
    ep.base_url = j.value("base_url", std::string{});
    if (j.contains("api_key")) ep.api_key = j.at("api_key").get<std::string>();
    ep.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    ep.max_retries = j.value("max_retries", 2);
    ep.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 200));
    ep.unit = parse_unit(j.value("unit", std::string("sentence")));
    ep.response_field = j.value("response_field", std::string("output"));
    ep.max_in_flight = j.value("max_in_flight", 4);
    if (const char* url = std::getenv(kGeneratorUrlEnv); url && *url) ep.base_url = url;
    if (!ep.api_key)
      if (const char* key = std::getenv(kGeneratorKeyEnv); key && *key) ep.api_key = key;
    ep.validate();
    return ep;
  }
};

/// Maps curly double quotes to '"' and curly single quotes to '\''.
inline std::string normalize_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80) {
      const auto third = static_cast<unsigned char>(text[i + 2]);
      if (third == 0x9C || third == 0x9D) {
        out.push_back('"');
        i += 2;
        continue;
      }
      if (third == 0x98 || third == 0x99) {
        out.push_back('\'');
        i += 2;
        continue;
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

namespace detail {

inline const nlohmann::json* json_path(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* cur = &root;
  while (!path.empty()) {
    const auto dot = path.find('.');
    const std::string part(path.substr(0, dot));
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
    if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        return nullptr;
      }
      if (idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else {
      return nullptr;
    }
  }
  return cur;
}

}  // namespace detail

/// Completion client with optional cassette capture/replay and a cap on
/// concurrent requests.
class GeneratorClient {
 public:
  explicit GeneratorClient(GeneratorEndpoint ep, std::shared_ptr<Cassette> cassette = nullptr)
      : ep_(std::move(ep)),
        cassette_(std::move(cassette)),
        slots_(std::make_unique<std::counting_semaphore<>>(ep_.max_in_flight)) {
    ep_.validate();
  }

  const GeneratorEndpoint& endpoint() const noexcept { return ep_; }
  std::size_t network_calls() const noexcept { return network_calls_.load(); }

  /// Raw generated text for `seed_text`.
  std::string complete(const std::string& seed_text) {
    if (trim(seed_text).empty()) throw PreconditionError("seed text is empty");
    const nlohmann::json request{{"text", seed_text}};

    std::optional<nlohmann::json> response;
    if (cassette_) response = cassette_->lookup(request);
    if (!response) {
      if (cassette_ && cassette_->mode() == CassetteMode::replay)
        throw ReplayMissError("no cassette entry for request " + Cassette::key(request));
      response = fetch(request);
      if (cassette_) cassette_->record(request, *response);
    }

    const auto* field = detail::json_path(*response, ep_.response_field);
    if (!field || !field->is_string())
      throw ProtocolError(200, response->dump(),
                          "generator response lacks string field '" + ep_.response_field + "'");
    std::string text = field->get<std::string>();
    if (trim(text).empty()) throw GenerationError("generator returned empty text");
    return text;
  }

 private:
  nlohmann::json fetch(const nlohmann::json& request) {
    HttpTarget target{ep_.base_url, ep_.timeout, ep_.max_retries, ep_.initial_backoff, {}};
    if (ep_.api_key) target.headers.emplace("api-key", *ep_.api_key);
    slots_->acquire();
    std::string body;
    try {
      ++network_calls_;
      body = post_json(target, "/generate", canonical_json(request));
    } catch (...) {
      slots_->release();
      throw;
    }
    slots_->release();
    try {
      return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError(200, body, "generator response is not JSON");
    }
  }

  GeneratorEndpoint ep_;
  std::shared_ptr<Cassette> cassette_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  std::atomic<std::size_t> network_calls_{0};
};

namespace detail {

/// Units of an article plus the sentence origins inside each unit.
struct UnitState {
  GenerationUnit unit;
  std::vector<std::string> units;
  std::optional<std::vector<std::vector<Provenance>>> origins;

  static UnitState from(const Article& a, GenerationUnit unit) {
    UnitState st{unit, {}, std::nullopt};
    const auto sentences = segment_sentences(a.body);
    const auto flat = sentence_origins(a, sentences.size());
    if (unit == GenerationUnit::sentence) {
      st.units = sentences;
      if (flat) {
        st.origins.emplace();
        for (auto p : *flat) st.origins->push_back({p});
      }
      return st;
    }
    st.units = segment_paragraphs(a.body);
    if (!flat) return st;
    std::vector<std::vector<Provenance>> per_unit;
    std::size_t offset = 0;
    for (const auto& para : st.units) {
      const std::size_t n = segment_sentences(para).size();
      if (offset + n > flat->size()) return st;
      per_unit.emplace_back(flat->begin() + static_cast<std::ptrdiff_t>(offset),
                            flat->begin() + static_cast<std::ptrdiff_t>(offset + n));
      offset += n;
    }
    if (offset == flat->size()) st.origins = std::move(per_unit);
    return st;
  }

  std::string body() const {
    return unit == GenerationUnit::sentence ? join_sentences(units) : join_paragraphs(units);
  }

  Article to_article(const Article& base) const {
    Article out = base;
    out.body = body();
    out.sentence_provenance.reset();
    if (origins) {
      std::vector<Provenance> flat;
      for (const auto& u : *origins) flat.insert(flat.end(), u.begin(), u.end());
      if (flat.size() == segment_sentences(out.body).size())
        out.sentence_provenance = std::move(flat);
    }
    return out;
  }

  void replace_after(std::size_t seed_index, GeneratorClient& client) {
    if (seed_index + 1 >= units.size())
      throw PreconditionError("seed index " + std::to_string(seed_index) +
                              " has no following unit");
    const std::string generated = normalize_quotes(client.complete(units[seed_index]));
    const auto pieces = unit == GenerationUnit::sentence ? segment_sentences(generated)
                                                         : segment_paragraphs(generated);
    if (pieces.empty()) throw GenerationError("generation contains no complete unit");
    units[seed_index + 1] = pieces.front();
    if (origins) {
      const std::size_t n =
          unit == GenerationUnit::sentence ? 1 : segment_sentences(pieces.front()).size();
      (*origins)[seed_index + 1].assign(n, Provenance::generated);
    }
  }
};

}  // namespace detail

/// Sends unit `seed_index` to the generator and replaces the following unit
/// with the first unit of the quote-normalized generation.
inline Article substitute_generated(const Article& article, std::size_t seed_index,
                                    GeneratorClient& client) {
  auto st = detail::UnitState::from(article, client.endpoint().unit);
  st.replace_after(seed_index, client);
  return st.to_article(article);
}

/// Step k replaces k distinct seeded-random units (never unit 0, never a
/// unit already replaced), each seeded by the unit before it in the current
/// (already perturbed) article. fraction = replaced / total units.
inline Spectrum generator_spectrum(const Article& article, GeneratorClient& client,
                                   SeededRng& rng) {
  auto st = detail::UnitState::from(article, client.endpoint().unit);
  const std::size_t total = st.units.size();
  if (total < 2) throw PreconditionError("generator spectrum needs at least 2 units");

  Spectrum sp;
  sp.base = article;
  if (!sp.base.sentence_provenance)
    sp.base.sentence_provenance = st.to_article(article).sentence_provenance;
  sp.mode = client.endpoint().unit == GenerationUnit::sentence
                ? SpectrumMode::generator_sentence
                : SpectrumMode::generator_paragraph;
  sp.seed = rng.seed();
  sp.base_units = total;
  sp.variants.push_back({sp.base, 0.0, 0, {}});

  std::vector<std::size_t> eligible(total - 1);
  std::iota(eligible.begin(), eligible.end(), std::size_t{1});
  for (std::size_t k = 1; k < total; ++k) {
    const auto pick = static_cast<std::size_t>(rng.below(eligible.size()));
    const std::size_t pos = eligible[pick];
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
    st.replace_after(pos - 1, client);
    sp.variants.push_back({st.to_article(article),
                           static_cast<double>(k) / static_cast<double>(total), k,
                           {Splice{pos, pos - 1}}});
  }
  return sp;
}

}  // namespace advtext
