#include <gtest/gtest.h>

#include "advtext/campaign.hpp"
#include "test_support.hpp"

namespace advtext {
namespace {

using testing::make_article;
using testing::read_file;
using testing::TempDir;

struct Workspace {
  TempDir dir;
  CampaignConfig cfg;

  Workspace(std::vector<Article> targets, std::vector<Article> sources,
            SpectrumMode mode = SpectrumMode::substitute) {
    cfg.corpus = dir.file("targets.jsonl");
    save_jsonl(targets, cfg.corpus);
    if (!sources.empty()) {
      cfg.source_corpus = dir.file("sources.jsonl");
      save_jsonl(sources, cfg.source_corpus);
    }
    cfg.output_dir = dir.file("out");
    cfg.mode = mode;
    cfg.seed = 7;
  }
  std::string out(const std::string& name) const { return read_file(dir.file("out/" + name)); }
};

std::vector<Article> human_corpus(std::size_t n, std::size_t sentences, std::uint64_t seed) {
  testing::SentenceGen gen(seed);
  std::vector<Article> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = make_article(join_sentences(gen.sentences(sentences)), Label::human);
    a.extras["id"] = "h" + std::to_string(i);
    out.push_back(a);
  }
  return out;
}

std::vector<Article> machine_corpus(std::size_t n, std::size_t sentences, std::uint64_t seed) {
  auto out = human_corpus(n, sentences, seed);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = Label::machine;
    out[i].extras["id"] = "m" + std::to_string(i);
  }
  return out;
}

TEST(Campaign, SubstituteWithProvenanceOracle) {
  Workspace ws({make_article("Alpha one. Alpha two. Alpha three.")},
               {make_article("Beta one. Beta two. Beta three.", Label::machine)});
  const auto r = run_campaign(ws.cfg);
  ASSERT_TRUE(r.all_completed());
  ASSERT_EQ(r.curves.size(), 1u);
  const auto& pts = r.curves[0].points;
  ASSERT_EQ(pts.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(pts[k].step, k);
    EXPECT_NEAR(pts[k].p_machine, k / 3.0, 1e-12);
    EXPECT_NEAR(pts[k].fraction, k / 3.0, 1e-12);
  }
  EXPECT_EQ(r.metrics[0].flip_point, 2u);
  EXPECT_NEAR(*r.metrics[0].usp, 200.0 / 3.0, 1e-9);
  EXPECT_EQ(r.curves[0].spectrum_id, "substitute-0000");

  const auto metrics = nlohmann::json::parse(ws.out("metrics.json"));
  EXPECT_EQ(metrics["spectra"][0]["flip_point"], 2);
  const auto manifest = nlohmann::json::parse(ws.out("manifest.json"));
  EXPECT_EQ(manifest["outputs"]["curve.csv"], sha256_hex(ws.out("curve.csv")));
  EXPECT_EQ(manifest["spectra"][0]["variants"], 4);
  EXPECT_EQ(manifest["inputs"].size(), 2u);
}

TEST(Campaign, OutputsAreByteIdenticalAcrossRunsAndParallelism) {
  Workspace a(human_corpus(6, 5, 1), machine_corpus(3, 4, 2));
  Workspace b(human_corpus(6, 5, 1), machine_corpus(3, 4, 2));
  b.cfg.parallelism = 4;
  run_campaign(a.cfg);
  run_campaign(b.cfg);
  EXPECT_EQ(a.out("curve.csv"), b.out("curve.csv"));
  EXPECT_EQ(a.out("variants.jsonl"), b.out("variants.jsonl"));
  EXPECT_EQ(a.out("metrics.json"), b.out("metrics.json"));

  Workspace c(human_corpus(6, 5, 1), machine_corpus(3, 4, 2));
  c.cfg.seed = 8;
  run_campaign(c.cfg);
  EXPECT_NE(a.out("variants.jsonl"), c.out("variants.jsonl"));
}

TEST(Campaign, LengthSweep) {
  Workspace ws(human_corpus(1, 8, 3), {}, SpectrumMode::length);
  const auto r = run_campaign(ws.cfg);
  ASSERT_EQ(r.curves.size(), 1u);
  const auto& pts = r.curves[0].points;
  ASSERT_EQ(pts.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(pts[k].step, k + 1);
    EXPECT_DOUBLE_EQ(pts[k].fraction, double(k + 1) / 8.0);
  }
  std::istringstream csv(ws.out("curve.csv"));
  EXPECT_EQ(read_curves_csv(csv), r.curves);
}

TEST(Campaign, FailingSpectrumIsIsolated) {
  auto targets = human_corpus(3, 4, 4);
  targets[1].body = "   ";
  Workspace ws(targets, machine_corpus(1, 4, 5));
  const auto r = run_campaign(ws.cfg);
  EXPECT_FALSE(r.all_completed());
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].first, "substitute-0001");
  EXPECT_EQ(r.curves.size(), 2u);
  const auto manifest = nlohmann::json::parse(ws.out("manifest.json"));
  EXPECT_TRUE(manifest["spectra"][1].contains("error"));
  const auto metrics = nlohmann::json::parse(ws.out("metrics.json"));
  EXPECT_EQ(metrics["failures"].size(), 1u);
  EXPECT_EQ(metrics["spectra"].size(), 2u);
}

TEST(Campaign, ConfigValidation) {
  Workspace ws(human_corpus(1, 3, 6), {});
  EXPECT_THROW(ws.cfg.validate(), PreconditionError);  // substitute needs a source
  ws.cfg.mode = SpectrumMode::synonym;
  EXPECT_THROW(ws.cfg.validate(), PreconditionError);
  ws.cfg.mode = SpectrumMode::embedding;
  EXPECT_THROW(ws.cfg.validate(), PreconditionError);
  ws.cfg.mode = SpectrumMode::length;
  EXPECT_NO_THROW(ws.cfg.validate());
  ws.cfg.corpus = ws.dir.file("missing.jsonl");
  EXPECT_THROW(run_campaign(ws.cfg), PreconditionError);
  EXPECT_THROW(CampaignConfig::from_json({{"mode", "shuffle"}}), ParseError);
}

TEST(Campaign, ConfigPathsResolveAgainstFileDirectory) {
  TempDir dir;
  testing::write_file(dir.file("c.json"),
                      R"({"seed": 3, "mode": "insert", "corpus": "data/t.jsonl",
                          "source_corpus": "/abs/s.jsonl", "output_dir": "out",
                          "classifier": {"kind": "lexical_stub"}})");
  const auto cfg = CampaignConfig::load(dir.file("c.json"));
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.mode, SpectrumMode::insert);
  EXPECT_EQ(cfg.corpus, dir.file("data/t.jsonl"));
  EXPECT_EQ(cfg.source_corpus, "/abs/s.jsonl");
  EXPECT_EQ(cfg.classifier.kind, ClassifierKind::lexical_stub);
}

TEST(Campaign, EmbeddingModeOneStepPerEpsilon) {
  TempDir dir;
  Workspace ws({make_article("The cat sat.")}, {}, SpectrumMode::embedding);
  testing::write_file(dir.file("vocab.txt"), "␣cat\n␣dog\n␣sat\n␣\nT\nh\ne\n.\n");
  const std::size_t v = 9;  // includes the appended <unk>
  EmbeddingTable e(v, v);
  for (std::size_t i = 0; i < v; ++i) e.row(i)[i] = 1.0f;
  GradientTable g(v, v);
  g.row(0)[0] = -1.0f;
  g.row(0)[1] = 1.0f;
  {
    std::ofstream eo(dir.file("e.txt")), go(dir.file("g.txt"));
    write_matrix(eo, e);
    write_matrix(go, g);
  }
  ws.cfg.vocab = dir.file("vocab.txt");
  ws.cfg.embeddings = dir.file("e.txt");
  ws.cfg.gradients = dir.file("g.txt");
  ws.cfg.epsilons = {0.0, 1.0};
  ws.cfg.classifier.kind = ClassifierKind::lexical_stub;
  const auto r = run_campaign(ws.cfg);
  ASSERT_TRUE(r.all_completed()) << r.failures[0].second;
  ASSERT_EQ(r.curves[0].points.size(), 3u);
  EXPECT_DOUBLE_EQ(r.curves[0].points[1].fraction, 0.0);
  EXPECT_GT(r.curves[0].points[2].fraction, 0.0);
  EXPECT_NE(ws.out("variants.jsonl").find("The dog sat."), std::string::npos);
  const auto manifest = nlohmann::json::parse(ws.out("manifest.json"));
  EXPECT_EQ(manifest["spectra"][0]["replacement_plans"][1]["plan"][0]["to_token"], "␣dog");
}

}  // namespace
}  // namespace advtext
