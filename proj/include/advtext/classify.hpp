#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/errors.hpp"
#include "advtext/hash.hpp"
#include "advtext/http.hpp"
#include "advtext/lexsub.hpp"
#include "json.hpp"

namespace advtext {

/// Two-class probabilities. Ties are labeled machine.
struct Verdict {
  double p_machine = 0.5;
  double p_human = 0.5;
  Label label = Label::machine;

  static Verdict from_p_machine(double p) {
    p = std::clamp(p, 0.0, 1.0);
    return {p, 1.0 - p, p >= 1.0 - p ? Label::machine : Label::human};
  }
  bool operator==(const Verdict&) const = default;
};

enum class ClassifierKind { remote, provenance_oracle, lexical_stub };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::remote: return "remote";
    case ClassifierKind::provenance_oracle: return "provenance_oracle";
    case ClassifierKind::lexical_stub: return "lexical_stub";
  }
  return "remote";
}

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "remote") return ClassifierKind::remote;
  if (s == "provenance_oracle") return ClassifierKind::provenance_oracle;
  if (s == "lexical_stub") return ClassifierKind::lexical_stub;
  throw ParseError("unknown classifier kind '" + s + "'");
}

inline constexpr const char* kClassifierUrlEnv = "ADVTEXT_CLASSIFIER_URL";

struct ClassifierEndpoint {
  ClassifierKind kind = ClassifierKind::provenance_oracle;
  std::string base_url;
  std::size_t batch_size = 8;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  int max_in_flight = 4;
  std::string cache_path;

  void validate() const {
    if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
    if (max_in_flight < 1) throw PreconditionError("max_in_flight must be >= 1");
    if (kind == ClassifierKind::remote && base_url.empty())
      throw PreconditionError("remote classifier needs a base_url");
  }

  static ClassifierEndpoint from_json(const nlohmann::json& j) {
    ClassifierEndpoint ep;
    ep.kind = parse_classifier_kind(j.value("kind", std::string("provenance_oracle")));
    ep.base_url = j.value("base_url", std::string{});
    ep.batch_size = j.value("batch_size", std::size_t{8});
    ep.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    ep.max_retries = j.value("max_retries", 2);
    ep.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 200));
    ep.max_in_flight = j.value("max_in_flight", 4);
    ep.cache_path = j.value("cache_path", std::string{});
    if (const char* url = std::getenv(kClassifierUrlEnv); url && *url) ep.base_url = url;
    ep.validate();
    return ep;
  }
};

// Built-in lexical stub: p_machine = logistic(a * mean_word_length + b).
inline constexpr double kLexicalStubSlope = 1.0;
inline constexpr double kLexicalStubBias = -4.5;

inline double mean_word_length(std::string_view text) {
  std::size_t words = 0, chars = 0;
  for (auto w : detail::whitespace_words(text)) {
    const auto core = detail::split_word(w).core;
    std::size_t n = 0;
    for (char c : core)
      if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    if (n == 0) continue;
    chars += n;
    ++words;
  }
  return words ? static_cast<double>(chars) / static_cast<double>(words) : 0.0;
}

inline double lexical_stub_score(std::string_view body) {
  return 1.0 / (1.0 + std::exp(-(kLexicalStubSlope * mean_word_length(body) + kLexicalStubBias)));
}

/// Fraction of machine-or-generated sentences; 0.5 when provenance is unknown.
inline double provenance_score(const Article& a) {
  if (!a.sentence_provenance || a.sentence_provenance->empty()) return 0.5;
  const auto& p = *a.sentence_provenance;
  const auto machine = std::count_if(p.begin(), p.end(), [](Provenance x) {
    return x == Provenance::machine || x == Provenance::generated;
  });
  return static_cast<double>(machine) / static_cast<double>(p.size());
}

/// Request object for one article. Every field is always sent; authors go
/// over the wire as one comma-joined string.
inline nlohmann::json classify_request_item(const Article& a) {
  return {{"article", a.body},
          {"title", a.title},
          {"authors", join_authors(a.authors)},
          {"domain", a.domain},
          {"date", a.date}};
}

/// Persistent verdict store keyed by content hash. File layout:
///   {"format": "advtext-verdict-cache", "version": 1,
///    "entries": {"<sha256>": {"p_machine": x, "p_human": y}}}
class VerdictCache {
 public:
  VerdictCache() = default;
  explicit VerdictCache(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path_ + ": " + e.what());
    }
    for (const auto& [k, v] : j.at("entries").items()) {
      const double pm = v.at("p_machine").get<double>();
      entries_[k] = Verdict{pm, v.at("p_human").get<double>(),
                            pm >= v.at("p_human").get<double>() ? Label::machine : Label::human};
    }
  }

  std::optional<Verdict> get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const Verdict& v) {
    std::lock_guard lock(mu_);
    entries_[key] = v;
    dirty_ = true;
  }

  void save() {
    std::lock_guard lock(mu_);
    if (path_.empty() || !dirty_) return;
    nlohmann::json j{{"format", "advtext-verdict-cache"}, {"version", 1}};
    j["entries"] = nlohmann::json::object();
    for (const auto& [k, v] : entries_)
      j["entries"][k] = {{"p_machine", v.p_machine}, {"p_human", v.p_human}};
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write cache " + tmp);
      out << j.dump(1) << '\n';
    }
    std::filesystem::rename(tmp, path_);
    dirty_ = false;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::map<std::string, Verdict> entries_;
  bool dirty_ = false;
};

/// Per-item outcome of a batch: a verdict or an error message.
struct BatchItem {
  std::optional<Verdict> verdict;
  std::string error;
  bool ok() const noexcept { return verdict.has_value(); }
};

/// Uniform access to the remote discriminator and the two built-in
/// reference classifiers. Every verdict goes through the content-hash cache.
class Classifier {
 public:
  explicit Classifier(ClassifierEndpoint ep)
      : ep_(std::move(ep)), cache_(ep_.cache_path) {
    ep_.validate();
  }
  ~Classifier() {
    try {
      cache_.save();
    } catch (...) {
    }
  }
  Classifier(const Classifier&) = delete;
  Classifier& operator=(const Classifier&) = delete;

  const ClassifierEndpoint& endpoint() const noexcept { return ep_; }
  std::size_t remote_calls() const noexcept { return remote_calls_.load(); }
  const VerdictCache& cache() const noexcept { return cache_; }
  void flush() { cache_.save(); }

  std::string cache_key(const Article& a) const {
    nlohmann::json item = classify_request_item(a);
    if (ep_.kind == ClassifierKind::remote) return sha256_json(item);
    if (ep_.kind == ClassifierKind::provenance_oracle) {
      auto prov = nlohmann::json::array();
      if (a.sentence_provenance)
        for (auto p : *a.sentence_provenance) prov.push_back(to_string(p));
      item["sentence_provenance"] = a.sentence_provenance ? prov : nlohmann::json(nullptr);
    }
    return sha256_hex(std::string(to_string(ep_.kind)) + ":" + canonical_json(item));
  }

  Verdict classify_one(const Article& a) {
    auto r = classify_batch({a});
    if (!r.front().ok()) throw Error(r.front().error);
    return *r.front().verdict;
  }

  /// Order-preserving. Items that fail carry an error; the batch goes on.
  std::vector<BatchItem> classify_batch(const std::vector<Article>& articles) {
    std::vector<BatchItem> out(articles.size());
    std::vector<std::size_t> pending;
    std::vector<std::string> keys(articles.size());
    for (std::size_t i = 0; i < articles.size(); ++i) {
      const auto& a = articles[i];
      if (trim(a.body).empty()) {
        out[i].error = "article body is empty";
        continue;
      }
      keys[i] = cache_key(a);
      if (auto v = cache_.get(keys[i])) {
        out[i].verdict = *v;
        continue;
      }
      switch (ep_.kind) {
        case ClassifierKind::provenance_oracle:
          out[i].verdict = Verdict::from_p_machine(provenance_score(a));
          break;
        case ClassifierKind::lexical_stub:
          out[i].verdict = Verdict::from_p_machine(lexical_stub_score(a.body));
          break;
        case ClassifierKind::remote:
          pending.push_back(i);
          continue;
      }
      cache_.put(keys[i], *out[i].verdict);
    }
    if (!pending.empty()) classify_remote(articles, pending, keys, out);
    cache_.save();
    return out;
  }

 private:
  void classify_remote(const std::vector<Article>& articles,
                       const std::vector<std::size_t>& pending,
                       const std::vector<std::string>& keys, std::vector<BatchItem>& out) {
    std::vector<std::vector<std::size_t>> chunks;
    for (std::size_t i = 0; i < pending.size(); i += ep_.batch_size) {
      chunks.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(i),
                          pending.begin() + static_cast<std::ptrdiff_t>(
                                                std::min(pending.size(), i + ep_.batch_size)));
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t c; (c = next.fetch_add(1)) < chunks.size();) {
        run_chunk(articles, chunks[c], keys, out);
      }
    };
    const auto workers =
        std::min(chunks.size(), static_cast<std::size_t>(ep_.max_in_flight));
    if (workers <= 1) {
      worker();
      return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  void run_chunk(const std::vector<Article>& articles, const std::vector<std::size_t>& chunk,
                 const std::vector<std::string>& keys, std::vector<BatchItem>& out) {
    nlohmann::json request{{"articles", nlohmann::json::array()}};
    for (auto i : chunk) request["articles"].push_back(classify_request_item(articles[i]));
    try {
      ++remote_calls_;
      HttpTarget target{ep_.base_url, ep_.timeout, ep_.max_retries, ep_.initial_backoff, {}};
      const std::string body = post_json(target, "/classify", canonical_json(request));
      const auto verdicts = parse_classify_response(body, chunk.size());
      for (std::size_t k = 0; k < chunk.size(); ++k) {
        out[chunk[k]].verdict = verdicts[k];
        cache_.put(keys[chunk[k]], verdicts[k]);
      }
    } catch (const std::exception& e) {
      for (auto i : chunk) out[i].error = e.what();
    }
  }

 public:
  /// Parses {"results": [{"p_machine": x, "p_human": y}, ...]}.
  static std::vector<Verdict> parse_classify_response(const std::string& body,
                                                      std::size_t expected) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError(200, body, "classifier response is not JSON");
    }
    if (!j.contains("results") || !j.at("results").is_array() ||
        j.at("results").size() != expected)
      throw ProtocolError(200, body, "classifier response has wrong 'results' shape");
    std::vector<Verdict> out;
    for (const auto& r : j.at("results")) {
      if (!r.contains("p_machine") || !r.at("p_machine").is_number())
        throw ProtocolError(200, body, "classifier result lacks p_machine");
      const double pm = r.at("p_machine").get<double>();
      const double ph = r.contains("p_human") ? r.at("p_human").get<double>() : 1.0 - pm;
      if (!(pm >= 0.0 && pm <= 1.0) || std::abs(pm + ph - 1.0) > 1e-6)
        throw ProtocolError(200, body, "classifier probabilities are inconsistent");
      out.push_back({pm, ph, pm >= ph ? Label::machine : Label::human});
    }
    return out;
  }

 private:
  ClassifierEndpoint ep_;
  VerdictCache cache_;
  std::atomic<std::size_t> remote_calls_{0};
};

}  // namespace advtext
