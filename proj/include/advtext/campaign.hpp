#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/blend.hpp"
#include "advtext/cassette.hpp"
#include "advtext/classify.hpp"
#include "advtext/embattack.hpp"
#include "advtext/errors.hpp"
#include "advtext/genclient.hpp"
#include "advtext/hash.hpp"
#include "advtext/lexsub.hpp"
#include "advtext/metrics.hpp"
#include "advtext/rng.hpp"
#include "advtext/spectrum.hpp"
#include "advtext/vocab.hpp"
#include "json.hpp"

namespace advtext {

inline constexpr int kOutputSchemaVersion = 1;

/// Experiment description, loaded from JSON. Relative paths in a config
/// file resolve against the file's directory.
struct CampaignConfig {
  std::uint64_t seed = 0;
  SpectrumMode mode = SpectrumMode::substitute;
  std::string corpus;
  std::string source_corpus;
  std::string output_dir;
  double decision_threshold = kDefaultDecisionThreshold;
  ClassifierEndpoint classifier;
  BodyKey body_key = BodyKey::article;
  std::size_t parallelism = 1;

  // position
  std::string position_sentence;
  // synonym / subjectivity
  std::string synonyms;
  std::string subjectivity;
  // generator
  std::optional<GeneratorEndpoint> generator;
  std::string cassette;
  CassetteMode cassette_mode = CassetteMode::off;
  // embedding
  std::string embeddings;
  std::string gradients;
  std::string vocab;
  std::string vocab_sidecar;
  std::vector<double> epsilons{kDefaultEpsilonGrid.begin(), kDefaultEpsilonGrid.end()};
  double similarity_threshold = kDefaultSimilarityThreshold;

  bool needs_source() const {
    return mode == SpectrumMode::substitute || mode == SpectrumMode::insert ||
           mode == SpectrumMode::subjectivity_asc || mode == SpectrumMode::subjectivity_desc ||
           (mode == SpectrumMode::position && position_sentence.empty());
  }

  /// Throws PreconditionError naming the first missing input.
  void validate() const {
    auto need = [](const std::string& path, const char* what) {
      if (path.empty()) throw PreconditionError(std::string("config needs '") + what + "'");
      if (!std::filesystem::exists(path))
        throw PreconditionError(std::string(what) + " path does not exist: " + path);
    };
    need(corpus, "corpus");
    if (output_dir.empty()) throw PreconditionError("config needs 'output_dir'");
    if (needs_source()) need(source_corpus, "source_corpus");
    if (mode == SpectrumMode::synonym) need(synonyms, "synonyms");
    if (mode == SpectrumMode::subjectivity_asc || mode == SpectrumMode::subjectivity_desc)
      need(subjectivity, "subjectivity");
    if (mode == SpectrumMode::generator_sentence || mode == SpectrumMode::generator_paragraph) {
      if (!generator) throw PreconditionError("config needs 'generator'");
      if (cassette_mode == CassetteMode::replay) need(cassette, "cassette");
    }
    if (mode == SpectrumMode::embedding) {
      need(embeddings, "embeddings");
      need(gradients, "gradients");
      need(vocab, "vocab");
      if (!vocab_sidecar.empty()) need(vocab_sidecar, "vocab_sidecar");
      if (epsilons.empty()) throw PreconditionError("config needs at least one epsilon");
    }
    if (parallelism < 1) throw PreconditionError("parallelism must be >= 1");
    classifier.validate();
  }

  static CampaignConfig from_json(const nlohmann::json& j, const std::string& base_dir = {}) {
    auto path = [&](const char* key) -> std::string {
      const std::string p = j.value(key, std::string{});
      if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
      return (std::filesystem::path(base_dir) / p).lexically_normal().string();
    };
    CampaignConfig c;
    try {
      c.seed = j.value("seed", std::uint64_t{0});
      c.mode = parse_mode(j.value("mode", std::string("substitute")));
      c.corpus = path("corpus");
      c.source_corpus = path("source_corpus");
      c.output_dir = path("output_dir");
      c.decision_threshold = j.value("decision_threshold", kDefaultDecisionThreshold);
      c.parallelism = j.value("parallelism", std::size_t{1});
      c.body_key = j.value("body_key", std::string("article")) == "text" ? BodyKey::text
                                                                           : BodyKey::article;
      if (j.contains("classifier")) {
        auto cj = j.at("classifier");
        if (cj.contains("cache_path") && !base_dir.empty() &&
            !std::filesystem::path(cj["cache_path"].get<std::string>()).is_absolute())
          cj["cache_path"] = (std::filesystem::path(base_dir) /
                              cj["cache_path"].get<std::string>()).string();
        c.classifier = ClassifierEndpoint::from_json(cj);
      }
      c.position_sentence = j.value("position_sentence", std::string{});
      c.synonyms = path("synonyms");
      c.subjectivity = path("subjectivity");
      if (j.contains("generator")) c.generator = GeneratorEndpoint::from_json(j.at("generator"));
      c.cassette = path("cassette");
      c.cassette_mode = parse_cassette_mode(j.value("cassette_mode", std::string("off")));
      c.embeddings = path("embeddings");
      c.gradients = path("gradients");
      c.vocab = path("vocab");
      c.vocab_sidecar = path("vocab_sidecar");
      if (j.contains("epsilons")) c.epsilons = j.at("epsilons").get<std::vector<double>>();
      c.similarity_threshold = j.value("similarity_threshold", kDefaultSimilarityThreshold);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
    return c;
  }

  static CampaignConfig load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open config " + file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file + ": " + e.what());
    }
    return from_json(j, std::filesystem::path(file).parent_path().string());
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"seed", seed},
                     {"mode", to_string(mode)},
                     {"corpus", corpus},
                     {"source_corpus", source_corpus},
                     {"output_dir", output_dir},
                     {"decision_threshold", decision_threshold},
                     {"parallelism", parallelism},
                     {"body_key", body_key == BodyKey::text ? "text" : "article"},
                     {"classifier",
                      {{"kind", to_string(classifier.kind)},
                       {"base_url", classifier.base_url},
                       {"batch_size", classifier.batch_size},
                       {"cache_path", classifier.cache_path}}}};
    if (!position_sentence.empty()) j["position_sentence"] = position_sentence;
    if (!synonyms.empty()) j["synonyms"] = synonyms;
    if (!subjectivity.empty()) j["subjectivity"] = subjectivity;
    if (generator) {
      j["generator"] = {{"base_url", generator->base_url},
                        {"unit", generator->unit == GenerationUnit::sentence ? "sentence"
                                                                             : "paragraph"},
                        {"response_field", generator->response_field},
                        {"max_retries", generator->max_retries}};
      j["cassette"] = cassette;
      j["cassette_mode"] = cassette_mode == CassetteMode::record   ? "record"
                           : cassette_mode == CassetteMode::replay ? "replay"
                                                                   : "off";
    }
    if (mode == SpectrumMode::embedding) {
      j["embeddings"] = embeddings;
      j["gradients"] = gradients;
      j["vocab"] = vocab;
      j["vocab_sidecar"] = vocab_sidecar;
      j["epsilons"] = epsilons;
      j["similarity_threshold"] = similarity_threshold;
    }
    return j;
  }
};

/// One generated spectrum (or the error that stopped it).
struct SpectrumJob {
  std::string spectrum_id;
  std::string base_id;
  std::string source_id;
  std::uint64_t seed = 0;
  std::optional<Spectrum> spectrum;
  nlohmann::json audit = nlohmann::json::array();
  std::string error;
};

struct SpectrumMetrics {
  std::string spectrum_id;
  std::optional<std::size_t> flip_point;
  std::optional<double> usp;
  std::size_t hesitation_count = 0;
  std::size_t points = 0;
};

inline SpectrumMetrics measure_curve(const ConfidenceCurve& c, double thr) {
  return {c.spectrum_id, flip_point(c, thr), usp(c, thr), hesitation_count(c, thr),
          c.points.size()};
}

inline nlohmann::json metrics_to_json(const std::vector<SpectrumMetrics>& ms, double thr,
                                      const nlohmann::json& failures = nlohmann::json::array()) {
  nlohmann::json j{{"schema_version", kOutputSchemaVersion}, {"decision_threshold", thr}};
  j["spectra"] = nlohmann::json::array();
  for (const auto& m : ms) {
    j["spectra"].push_back(
        {{"spectrum_id", m.spectrum_id},
         {"flip_point", m.flip_point ? nlohmann::json(*m.flip_point) : nlohmann::json(nullptr)},
         {"usp", m.usp ? nlohmann::json(*m.usp) : nlohmann::json(nullptr)},
         {"hesitation_count", m.hesitation_count},
         {"points", m.points}});
  }
  j["failures"] = failures;
  return j;
}

namespace detail {

inline std::string article_id(const Article& a, std::size_t index) {
  if (auto it = a.extras.find("id"); it != a.extras.end()) {
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  std::ostringstream os;
  os << "corpus#" << index;
  return os.str();
}

inline std::string spectrum_id(SpectrumMode mode, std::size_t index) {
  std::string n = std::to_string(index);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return std::string(to_string(mode)) + "-" + n;
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << bytes;
  if (!out) throw Error("write failed for " + p.string());
}

/// Shared, read-only resources one campaign needs.
struct CampaignResources {
  std::vector<Article> targets;
  std::vector<Article> sources;
  std::optional<SynonymLexicon> synonyms;
  std::optional<SubjectivityLexicon> subjectivity;
  std::shared_ptr<GeneratorClient> generator;
  std::optional<Vocabulary> vocab;
  std::optional<EmbeddingTable> embeddings;
  std::optional<GradientTable> gradients;

  static CampaignResources load(const CampaignConfig& cfg) {
    CampaignResources r;
    r.targets = load_jsonl(cfg.corpus);
    if (!cfg.source_corpus.empty()) r.sources = load_jsonl(cfg.source_corpus);
    if (cfg.needs_source() && r.sources.empty())
      throw PreconditionError("source corpus is empty");
    if (cfg.mode == SpectrumMode::synonym) r.synonyms = load_synonyms(cfg.synonyms);
    if (cfg.mode == SpectrumMode::subjectivity_asc || cfg.mode == SpectrumMode::subjectivity_desc)
      r.subjectivity = load_subjectivity(cfg.subjectivity);
    if (cfg.mode == SpectrumMode::generator_sentence ||
        cfg.mode == SpectrumMode::generator_paragraph) {
      auto ep = *cfg.generator;
      ep.unit = cfg.mode == SpectrumMode::generator_sentence ? GenerationUnit::sentence
                                                             : GenerationUnit::paragraph;
      std::shared_ptr<Cassette> cassette;
      if (!cfg.cassette.empty() || cfg.cassette_mode != CassetteMode::off)
        cassette = std::make_shared<Cassette>(cfg.cassette, cfg.cassette_mode);
      r.generator = std::make_shared<GeneratorClient>(ep, cassette);
    }
    if (cfg.mode == SpectrumMode::embedding) {
      r.vocab = load_vocabulary(cfg.vocab, cfg.vocab_sidecar);
      r.embeddings = load_matrix<EmbeddingTag>(cfg.embeddings);
      r.gradients = load_matrix<GradientTag>(cfg.gradients);
      require_paired(*r.embeddings, *r.gradients);
    }
    return r;
  }
};

/// Step 0 is the base; step i applies the attack with the i-th epsilon.
/// fraction = share of token positions rewritten.
inline Spectrum embedding_spectrum(const Article& target, const CampaignResources& r,
                                   const CampaignConfig& cfg, nlohmann::json& audit) {
  if (trim(target.body).empty()) throw PreconditionError("article body is empty");
  Spectrum sp;
  sp.base = target;
  sp.mode = SpectrumMode::embedding;
  sp.variants.push_back({target, 0.0, 0, {}});
  const auto seq = r.vocab->encode(target.body);
  sp.base_units = seq.ids.size();
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    AttackConfig ac{cfg.epsilons[i], cfg.similarity_threshold, {}};
    auto res = attack(target, *r.embeddings, *r.gradients, ac, *r.vocab);
    const auto rewritten = rewrite_tokens(seq, res.plan);
    std::size_t changed = 0;
    for (std::size_t k = 0; k < seq.ids.size(); ++k) changed += seq.ids[k] != rewritten.ids[k];
    std::vector<Splice> splices;
    for (const auto& [from, rep] : res.plan) splices.push_back({from, rep.to});
    audit.push_back({{"step", i + 1},
                     {"epsilon", cfg.epsilons[i]},
                     {"plan", plan_to_json(res.plan, *r.vocab)}});
    sp.variants.push_back({std::move(res.article),
                           seq.ids.empty() ? 0.0
                                           : static_cast<double>(changed) /
                                                 static_cast<double>(seq.ids.size()),
                           i + 1, std::move(splices)});
  }
  return sp;
}

inline Spectrum build_spectrum(std::size_t index, const CampaignResources& r,
                               const CampaignConfig& cfg, SeededRng& rng,
                               nlohmann::json& audit) {
  const Article& target = r.targets[index];
  const Article* source = r.sources.empty() ? nullptr : &r.sources[index % r.sources.size()];
  switch (cfg.mode) {
    case SpectrumMode::substitute: return substitute_spectrum(target, *source, rng);
    case SpectrumMode::insert: return insert_spectrum(target, *source, rng);
    case SpectrumMode::position: {
      if (!cfg.position_sentence.empty()) return position_sweep(target, cfg.position_sentence);
      const auto sentences = segment_sentences(source->body);
      if (sentences.empty()) throw PreconditionError("source article has no sentences");
      const auto origin = sentence_origins(*source, sentences.size());
      return position_sweep(target, sentences.front(),
                            origin ? origin->front() : Provenance::machine);
    }
    case SpectrumMode::length: return length_sweep(target);
    case SpectrumMode::subjectivity_asc:
      return subjectivity_ordered_insertion(target, *source, *r.subjectivity, SortOrder::asc, rng);
    case SpectrumMode::subjectivity_desc:
      return subjectivity_ordered_insertion(target, *source, *r.subjectivity, SortOrder::desc,
                                            rng);
    case SpectrumMode::synonym: return synonym_spectrum(target, *r.synonyms, rng);
    case SpectrumMode::generator_sentence:
    case SpectrumMode::generator_paragraph:
      return generator_spectrum(target, *r.generator, rng);
    case SpectrumMode::embedding: return embedding_spectrum(target, r, cfg, audit);
  }
  throw PreconditionError("unsupported mode");
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
}

}  // namespace detail

/// Builds one spectrum per corpus article. Each article i draws from its own
/// stream SeededRng(seed).fork(i); errors are captured per spectrum.
inline std::vector<SpectrumJob> generate_spectra(const CampaignConfig& cfg) {
  const auto res = detail::CampaignResources::load(cfg);
  std::vector<SpectrumJob> jobs(res.targets.size());
  const SeededRng campaign(cfg.seed);
  detail::parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t i) {
    auto& job = jobs[i];
    job.spectrum_id = detail::spectrum_id(cfg.mode, i);
    job.base_id = detail::article_id(res.targets[i], i);
    if (!res.sources.empty() && cfg.needs_source())
      job.source_id =
          detail::article_id(res.sources[i % res.sources.size()], i % res.sources.size());
    SeededRng rng = campaign.fork(i);
    job.seed = rng.seed();
    try {
      job.spectrum = detail::build_spectrum(i, res, cfg, rng, job.audit);
    } catch (const std::exception& e) {
      job.error = e.what();
    }
  });
  return jobs;
}

/// JSONL, one variant per line, tagged with spectrum_id / step / fraction.
inline std::string variants_jsonl(const std::vector<SpectrumJob>& jobs, BodyKey key) {
  std::ostringstream os;
  for (const auto& job : jobs) {
    if (!job.spectrum) continue;
    for (const auto& v : job.spectrum->variants) {
      auto j = article_to_json(v.article, key);
      j["spectrum_id"] = job.spectrum_id;
      j["step"] = v.step;
      j["fraction"] = v.fraction;
      os << j.dump() << '\n';
    }
  }
  return os.str();
}

inline nlohmann::json spectra_manifest(const std::vector<SpectrumJob>& jobs) {
  auto arr = nlohmann::json::array();
  for (const auto& job : jobs) {
    nlohmann::json j{{"spectrum_id", job.spectrum_id},
                     {"base_id", job.base_id},
                     {"source_id", job.source_id},
                     {"seed", job.seed}};
    if (job.spectrum) {
      j["mode"] = to_string(job.spectrum->mode);
      j["variants"] = job.spectrum->variants.size();
      j["splice_log"] = splice_log(*job.spectrum);
      if (!job.audit.empty()) j["replacement_plans"] = job.audit;
    } else {
      j["error"] = job.error;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Groups tagged variant records (as written by variants_jsonl) by
/// spectrum and classifies them; a spectrum with any failed item is
/// reported in `failures` and left out.
inline std::vector<ConfidenceCurve> classify_tagged(
    const std::vector<Article>& tagged, Classifier& classifier,
    std::vector<std::pair<std::string, std::string>>* failures = nullptr) {
  std::vector<ConfidenceCurve> curves;
  std::vector<std::vector<Article>> groups;
  for (const auto& a : tagged) {
    const std::string id = a.extras.value("spectrum_id", std::string("spectrum"));
    if (curves.empty() || curves.back().spectrum_id != id) {
      curves.push_back({id, {}});
      groups.emplace_back();
    }
    CurvePoint p;
    p.step = a.extras.value("step", curves.back().points.size());
    p.fraction = a.extras.value("fraction", 0.0);
    curves.back().points.push_back(p);
    groups.back().push_back(a);
  }
  std::vector<ConfidenceCurve> ok;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto results = classifier.classify_batch(groups[g]);
    std::string err;
    for (std::size_t k = 0; k < results.size(); ++k) {
      if (!results[k].ok()) {
        err = "step " + std::to_string(curves[g].points[k].step) + ": " + results[k].error;
        break;
      }
      curves[g].points[k].p_machine = results[k].verdict->p_machine;
      curves[g].points[k].p_human = results[k].verdict->p_human;
    }
    if (err.empty()) ok.push_back(std::move(curves[g]));
    else if (failures) failures->emplace_back(curves[g].spectrum_id, err);
  }
  return ok;
}

struct CampaignResult {
  std::vector<ConfidenceCurve> curves;
  std::vector<SpectrumMetrics> metrics;
  std::vector<std::pair<std::string, std::string>> failures;
  std::size_t spectra = 0;
  bool all_completed() const { return failures.empty(); }
};

/// generate -> classify -> measure, then writes variants.jsonl, curve.csv,
/// metrics.json and manifest.json into cfg.output_dir. A failing spectrum
/// is recorded and skipped; the rest of the campaign continues.
inline CampaignResult run_campaign(const CampaignConfig& cfg) {
  cfg.validate();
  auto jobs = generate_spectra(cfg);
  Classifier classifier(cfg.classifier);

  CampaignResult result;
  result.spectra = jobs.size();
  std::vector<std::optional<ConfidenceCurve>> curves(jobs.size());
  std::vector<std::string> errors(jobs.size());
  detail::parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t i) {
    const auto& job = jobs[i];
    if (!job.spectrum) {
      errors[i] = job.error;
      return;
    }
    std::vector<Article> articles;
    for (const auto& v : job.spectrum->variants) articles.push_back(v.article);
    const auto verdicts = classifier.classify_batch(articles);
    ConfidenceCurve c{job.spectrum_id, {}};
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
      const auto& v = job.spectrum->variants[k];
      if (!verdicts[k].ok()) {
        errors[i] = "step " + std::to_string(v.step) + ": " + verdicts[k].error;
        return;
      }
      c.points.push_back({v.step, v.fraction, verdicts[k].verdict->p_machine,
                          verdicts[k].verdict->p_human});
    }
    curves[i] = std::move(c);
  });
  classifier.flush();

  auto failures = nlohmann::json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (curves[i]) {
      result.metrics.push_back(measure_curve(*curves[i], cfg.decision_threshold));
      result.curves.push_back(std::move(*curves[i]));
    } else {
      result.failures.emplace_back(jobs[i].spectrum_id, errors[i]);
      failures.push_back({{"spectrum_id", jobs[i].spectrum_id}, {"error", errors[i]}});
    }
  }

  const std::filesystem::path out = cfg.output_dir;
  std::filesystem::create_directories(out);
  const std::string variants = variants_jsonl(jobs, cfg.body_key);
  std::ostringstream csv;
  write_curves_csv(csv, result.curves, cfg.decision_threshold);
  const std::string metrics =
      metrics_to_json(result.metrics, cfg.decision_threshold, failures).dump(2) + "\n";
  detail::write_file(out / "variants.jsonl", variants);
  detail::write_file(out / "curve.csv", csv.str());
  detail::write_file(out / "metrics.json", metrics);

  nlohmann::json manifest{{"schema_version", kOutputSchemaVersion},
                          {"tool", "advtext"},
                          {"config", cfg.to_json()},
                          {"seed", cfg.seed}};
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto* p : {&cfg.corpus, &cfg.source_corpus, &cfg.synonyms, &cfg.subjectivity,
                        &cfg.embeddings, &cfg.gradients, &cfg.vocab, &cfg.vocab_sidecar,
                        &cfg.cassette}) {
    if (!p->empty() && std::filesystem::exists(*p)) inputs[*p] = sha256_file(*p);
  }
  manifest["inputs"] = inputs;
  manifest["outputs"] = {{"variants.jsonl", sha256_hex(variants)},
                         {"curve.csv", sha256_hex(csv.str())},
                         {"metrics.json", sha256_hex(metrics)}};
  manifest["spectra"] = spectra_manifest(jobs);
  detail::write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace advtext
