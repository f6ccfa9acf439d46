#include <pthread.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "advtext/advtext.hpp"
#include "advtext/stub_server.hpp"

namespace fs = std::filesystem;
using namespace advtext;

namespace {

constexpr int kExitIncomplete = 2;
constexpr int kExitError = 1;

/// Flags shared by `generate` and `run`; anything set here wins over the
/// config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string corpus;
  std::string source_corpus;
  std::string out;
  std::vector<double> epsilons;
  std::optional<double> threshold;
  std::optional<double> decision_threshold;
  std::string embeddings;
  std::string gradients;
  std::string vocab;
  std::string vocab_sidecar;
  std::string classifier;
  std::string classifier_url;
  std::string classifier_cache;
  std::string generator_url;
  std::string cassette;
  std::string cassette_mode;
  std::string position_sentence;
  std::string synonyms;
  std::string subjectivity;
  std::optional<std::size_t> parallelism;
  std::string body_key;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON campaign config");
    app->add_option("--seed", seed, "Campaign seed");
    app->add_option("--mode", mode, "Spectrum mode");
    app->add_option("--corpus", corpus, "Target corpus (JSONL)");
    app->add_option("--source-corpus", source_corpus, "Source corpus (JSONL)");
    app->add_option("-o,--out", out, "Output directory");
    app->add_option("--epsilon", epsilons, "Embedding attack step size (repeatable)");
    app->add_option("--threshold", threshold, "Minimum cosine similarity for a token pair");
    app->add_option("--decision-threshold", decision_threshold,
                    "p_machine at or above this counts as machine");
    app->add_option("--embeddings", embeddings, "Embedding matrix file");
    app->add_option("--gradients", gradients, "Gradient matrix file");
    app->add_option("--vocab", vocab, "Vocabulary file, one token per line");
    app->add_option("--vocab-sidecar", vocab_sidecar, "Vocabulary sidecar JSON");
    app->add_option("--classifier", classifier,
                    "remote | provenance_oracle | lexical_stub");
    app->add_option("--classifier-url", classifier_url, "Remote classifier base URL");
    app->add_option("--classifier-cache", classifier_cache, "Verdict cache file");
    app->add_option("--generator-url", generator_url, "Generator base URL");
    app->add_option("--cassette", cassette, "Generator cassette file");
    app->add_option("--cassette-mode", cassette_mode, "off | record | replay");
    app->add_option("--position-sentence", position_sentence, "Sentence for position sweeps");
    app->add_option("--synonyms", synonyms, "Synonym lexicon JSON");
    app->add_option("--subjectivity", subjectivity, "Subjectivity lexicon JSON");
    app->add_option("-j,--parallelism", parallelism, "Spectra processed concurrently");
    app->add_option("--body-key", body_key, "Body field written to JSONL: article | text");
  }

  CampaignConfig resolve() const {
    CampaignConfig cfg = config.empty() ? CampaignConfig{} : CampaignConfig::load(config);
    if (seed) cfg.seed = *seed;
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!corpus.empty()) cfg.corpus = corpus;
    if (!source_corpus.empty()) cfg.source_corpus = source_corpus;
    if (!out.empty()) cfg.output_dir = out;
    if (!epsilons.empty()) cfg.epsilons = epsilons;
    if (threshold) cfg.similarity_threshold = *threshold;
    if (decision_threshold) cfg.decision_threshold = *decision_threshold;
    if (!embeddings.empty()) cfg.embeddings = embeddings;
    if (!gradients.empty()) cfg.gradients = gradients;
    if (!vocab.empty()) cfg.vocab = vocab;
    if (!vocab_sidecar.empty()) cfg.vocab_sidecar = vocab_sidecar;
    if (!classifier.empty()) cfg.classifier.kind = parse_classifier_kind(classifier);
    if (!classifier_url.empty()) cfg.classifier.base_url = classifier_url;
    if (!classifier_cache.empty()) cfg.classifier.cache_path = classifier_cache;
    if (!generator_url.empty()) {
      if (!cfg.generator) cfg.generator = GeneratorEndpoint{};
      cfg.generator->base_url = generator_url;
    }
    if (!cassette.empty()) cfg.cassette = cassette;
    if (!cassette_mode.empty()) cfg.cassette_mode = parse_cassette_mode(cassette_mode);
    if (!position_sentence.empty()) cfg.position_sentence = position_sentence;
    if (!synonyms.empty()) cfg.synonyms = synonyms;
    if (!subjectivity.empty()) cfg.subjectivity = subjectivity;
    if (parallelism) cfg.parallelism = *parallelism;
    if (!body_key.empty()) cfg.body_key = body_key == "text" ? BodyKey::text : BodyKey::article;
    return cfg;
  }
};

void write_text(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << bytes;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int report_failures(const std::vector<std::pair<std::string, std::string>>& failures,
                    std::size_t total) {
  for (const auto& [id, err] : failures) std::cerr << "spectrum " << id << " failed: " << err << '\n';
  std::cerr << (total - failures.size()) << "/" << total << " spectra completed\n";
  return failures.empty() ? 0 : kExitIncomplete;
}

int cmd_generate(const Overrides& o) {
  auto cfg = o.resolve();
  cfg.validate();
  const auto jobs = generate_spectra(cfg);
  const fs::path out = cfg.output_dir;
  const auto variants = variants_jsonl(jobs, cfg.body_key);
  write_text(out / "variants.jsonl", variants);
  nlohmann::json manifest{{"schema_version", kOutputSchemaVersion},
                          {"tool", "advtext"},
                          {"config", cfg.to_json()},
                          {"seed", cfg.seed},
                          {"outputs", {{"variants.jsonl", sha256_hex(variants)}}},
                          {"spectra", spectra_manifest(jobs)}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& j : jobs)
    if (!j.spectrum) failures.emplace_back(j.spectrum_id, j.error);
  return report_failures(failures, jobs.size());
}

struct ClassifyArgs {
  std::string input;
  std::string output;
  std::string config;
  std::string kind;
  std::string url;
  std::string cache;
  std::optional<std::size_t> batch_size;
  std::optional<double> decision_threshold;
};

int cmd_classify(const ClassifyArgs& a) {
  ClassifierEndpoint ep;
  double thr = kDefaultDecisionThreshold;
  if (!a.config.empty()) {
    const auto cfg = CampaignConfig::load(a.config);
    ep = cfg.classifier;
    thr = cfg.decision_threshold;
  }
  if (!a.kind.empty()) ep.kind = parse_classifier_kind(a.kind);
  if (!a.url.empty()) ep.base_url = a.url;
  if (!a.cache.empty()) ep.cache_path = a.cache;
  if (a.batch_size) ep.batch_size = *a.batch_size;
  if (a.decision_threshold) thr = *a.decision_threshold;

  const auto tagged = load_jsonl(a.input);
  Classifier classifier(ep);
  std::vector<std::pair<std::string, std::string>> failures;
  const auto curves = classify_tagged(tagged, classifier, &failures);
  classifier.flush();
  std::ostringstream csv;
  write_curves_csv(csv, curves, thr);
  write_text(a.output, csv.str());
  return report_failures(failures, curves.size() + failures.size());
}

int cmd_measure(const std::string& input, const std::string& output, double thr) {
  std::istringstream in(read_text(input));
  const auto curves = read_curves_csv(in);
  std::vector<SpectrumMetrics> ms;
  for (const auto& c : curves) ms.push_back(measure_curve(c, thr));
  write_text(output, metrics_to_json(ms, thr).dump(2) + "\n");
  return 0;
}

int cmd_run(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto result = run_campaign(cfg);
  std::cerr << "outputs written to " << cfg.output_dir << '\n';
  return report_failures(result.failures, result.spectra);
}

int cmd_serve_stub(const std::string& host, int port, const std::string& api_key) {
  // Block the shutdown signals before the server thread starts so that only
  // sigwait below sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  StubServer::Options opt;
  opt.host = host;
  opt.port = port;
  if (!api_key.empty()) opt.required_api_key = api_key;
  StubServer server(opt);
  std::cout << server.url() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial text spectra: generate, classify, measure"};
  app.require_subcommand(1);

  Overrides gen_o, run_o;
  auto* gen = app.add_subcommand("generate", "Build spectra and write variants.jsonl");
  gen_o.add_to(gen);

  ClassifyArgs cls_a;
  auto* cls = app.add_subcommand("classify", "Classify a variants JSONL into a curve CSV");
  cls->add_option("-i,--input", cls_a.input, "Variants JSONL")->required();
  cls->add_option("-o,--output", cls_a.output, "Curve CSV")->required();
  cls->add_option("-c,--config", cls_a.config, "Campaign config supplying the classifier");
  cls->add_option("--classifier", cls_a.kind, "remote | provenance_oracle | lexical_stub");
  cls->add_option("--classifier-url", cls_a.url, "Remote classifier base URL");
  cls->add_option("--classifier-cache", cls_a.cache, "Verdict cache file");
  cls->add_option("--batch-size", cls_a.batch_size, "Articles per remote request");
  cls->add_option("--decision-threshold", cls_a.decision_threshold, "Label threshold");

  std::string m_in, m_out;
  double m_thr = kDefaultDecisionThreshold;
  auto* meas = app.add_subcommand("measure", "Compute flip point, USP and hesitation");
  meas->add_option("-i,--input", m_in, "Curve CSV")->required();
  meas->add_option("-o,--output", m_out, "Metrics JSON")->required();
  meas->add_option("--decision-threshold", m_thr, "Label threshold");

  auto* run = app.add_subcommand("run", "generate, classify and measure in one pass");
  run_o.add_to(run);

  std::string s_host = "127.0.0.1", s_key;
  int s_port = 8080;
  auto* serve = app.add_subcommand("serve-stub", "Serve the stub classifier and generator");
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("--port", s_port, "Port (0 picks a free one)");
  serve->add_option("--api-key", s_key, "Require this api-key header");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_o);
    if (cls->parsed()) return cmd_classify(cls_a);
    if (meas->parsed()) return cmd_measure(m_in, m_out, m_thr);
    if (run->parsed()) return cmd_run(run_o);
    if (serve->parsed()) return cmd_serve_stub(s_host, s_port, s_key);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
