// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>

#include "advtext/advtext.hpp"
#include "advtext/stub_server.hpp"
#include "test_support.hpp"

namespace {

using namespace advtext;
using advtext::testing::make_article;
using advtext::testing::SentenceGen;

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void note(std::string s) { notes_.push_back(std::move(s)); }
  bool ok() const { return !failed_; }
  std::string detail() const {
    std::string out;
    for (const auto& s : failed_ ? failures_ : notes_) out += (out.empty() ? "" : "; ") + s;
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

template <class Tag>
Table<Tag> random_table(SeededRng& rng, std::size_t r, std::size_t c) {
  Table<Tag> t(r, c);
  for (auto& x : t.values)
    x = static_cast<float>(static_cast<double>(rng.below(2000001)) / 1e6 - 1.0);
  return t;
}

// Plain O(T*V*D) scan written straight from the pairing rule.
ReplacementPlan brute_force_pairs(const EmbeddingTable& e, const GradientTable& g, double eps,
                                  double thr, const std::set<TokenId>& used) {
  ReplacementPlan plan;
  const std::size_t d = e.cols;
  for (TokenId t : used) {
    std::vector<double> a(d);
    for (std::size_t k = 0; k < d; ++k)
      a[k] = static_cast<float>(static_cast<double>(e.values[t * d + k]) +
                                eps * static_cast<double>(g.values[t * d + k]));
    double aa = 0;
    for (double x : a) aa += x * x;
    if (aa == 0) continue;
    bool found = false;
    TokenId best_id = 0;
    double best = 0;
    for (TokenId c = 0; c < e.rows; ++c) {
      if (c == t) continue;
      double num = 0, cc = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const double x = e.values[c * d + k];
        num += x * a[k];
        cc += x * x;
      }
      if (cc == 0) continue;
      const double s = num / (std::sqrt(cc) * std::sqrt(aa));
      if (!found || s > best) {
        found = true;
        best = s;
        best_id = c;
      }
    }
    if (found && best > thr) plan.emplace(t, Replacement{best_id, best});
  }
  return plan;
}

void pairing_oracle(Check& c) {
  SeededRng rng(20240601);
  double fast_seconds = 0;
  std::size_t configs = 0, pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t v = trial == 0 ? 512 : 2 + rng.below(511);
    const std::size_t d = trial == 0 ? 64 : 1 + rng.below(64);
    const auto e = random_table<EmbeddingTag>(rng, v, d);
    const auto g = random_table<GradientTag>(rng, v, d);
    std::set<TokenId> used;
    const std::size_t want_used = 1 + rng.below(v);
    for (TokenId id : shuffle(v, rng)) {
      if (used.size() == want_used) break;
      used.insert(id);
    }
    for (double eps : kDefaultEpsilonGrid) {
      for (double thr : {0.0, 0.18, 0.9}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto got = find_token_pairs(e, g, {eps, thr, {}}, used);
        fast_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto want = brute_force_pairs(e, g, eps, thr, used);
        c.expect(got == want, "trial " + std::to_string(trial) + " V=" + std::to_string(v) +
                                  " D=" + std::to_string(d) + " eps=" + format_double(eps) +
                                  " thr=" + format_double(thr) + " differs from brute force");
        ++configs;
        pairs += got.size();
      }
    }
  }
  c.expect(fast_seconds < 10.0, "find_token_pairs took " + format_double(fast_seconds) + " s");
  c.note(std::to_string(configs) + " configurations, " + std::to_string(pairs) +
         " pairs, exact match, " + format_double(std::round(fast_seconds * 1000) / 1000) + " s");
}

void adversarial_identities(Check& c) {
  SeededRng rng(77);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = random_table<EmbeddingTag>(rng, 64, 16);
    const auto g = random_table<GradientTag>(rng, 64, 16);
    const auto zero = adversarial_table(e, g, 0.0);
    c.expect(zero.rows == e.rows && zero.cols == e.cols &&
                 std::memcmp(zero.values.data(), e.values.data(),
                             e.values.size() * sizeof(float)) == 0,
             "eps=0 is not bitwise identical");
    // A(a) + A(b) - E == A(a+b) and A(2a) - E == 2 (A(a) - E), measured
    // against the largest entry of the combined table.
    for (double a : kDefaultEpsilonGrid) {
      for (double b : kDefaultEpsilonGrid) {
        const auto ta = adversarial_table(e, g, a);
        const auto tb = adversarial_table(e, g, b);
        const auto tab = adversarial_table(e, g, a + b);
        double diff = 0, scale = 0;
        for (std::size_t i = 0; i < e.values.size(); ++i) {
          const double lhs = double(ta.values[i]) + double(tb.values[i]) - double(e.values[i]);
          diff = std::max(diff, std::abs(lhs - double(tab.values[i])));
          scale = std::max(scale, std::abs(double(tab.values[i])));
        }
        const double rel = scale > 0 ? diff / scale : diff;
        worst = std::max(worst, rel);
        c.expect(rel <= 1e-5, "additivity eps=" + format_double(a) + "+" + format_double(b) +
                                  " rel err " + format_double(rel));
      }
      const auto ta = adversarial_table(e, g, a);
      const auto t2 = adversarial_table(e, g, 2 * a);
      double diff = 0, scale = 0;
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        const double lhs = 2.0 * (double(ta.values[i]) - double(e.values[i]));
        diff = std::max(diff, std::abs(lhs - (double(t2.values[i]) - double(e.values[i]))));
        scale = std::max(scale, std::abs(double(t2.values[i])));
      }
      const double rel = diff / scale;
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-5, "homogeneity eps=" + format_double(a) + " rel err " + format_double(rel));
    }
  }
  c.note("eps=0 bitwise on 20 tables, worst linearity rel err " + format_double(worst));
}

std::string random_text(SeededRng& rng, std::size_t len) {
  static const char* kPieces[] = {"a", "b", "c", "d", "e", " ", " ", "é", ".", "ab", "cd"};
  std::string s;
  while (s.size() < len) s += kPieces[rng.below(std::size(kPieces))];
  return s;
}

Vocabulary random_vocab(SeededRng& rng) {
  std::vector<std::string> tokens{"a", "b", "c", "d", "e", ".", "␣"};
  const char* merges[] = {"ab", "cd", "␣a", "␣ab", "␣c", "de", "e.", "␣e", "bc", "abc", "␣d"};
  for (const char* m : merges)
    if (rng.below(2)) tokens.emplace_back(m);
  return Vocabulary(tokens);
}

void expect_reference_rewrite(Check& c, const std::string& before_file, const std::string& after_file,
                   const std::string& from, const std::string& to, std::size_t occurrences) {
  const auto before = advtext::testing::read_file(advtext::testing::fixture(before_file));
  const auto after = advtext::testing::read_file(advtext::testing::fixture(after_file));
  std::set<std::string> chars;
  for (const auto* text : {&before, &after})
    for (std::size_t i = 0; i < text->size();) {
      const auto b = static_cast<unsigned char>((*text)[i]);
      const std::size_t n = b >= 0xF0 ? 4 : b >= 0xE0 ? 3 : b >= 0xC0 ? 2 : 1;
      const auto ch = text->substr(i, n);
      chars.insert(ch == " " ? std::string(kDefaultSpaceMarker) : ch);
      i += n;
    }
  std::vector<std::string> tokens(chars.begin(), chars.end());
  tokens.push_back(std::string(kDefaultSpaceMarker) + from);
  tokens.push_back(std::string(kDefaultSpaceMarker) + to);
  const Vocabulary vocab(tokens);
  const TokenId from_id = static_cast<TokenId>(tokens.size() - 2);
  const TokenId to_id = static_cast<TokenId>(tokens.size() - 1);
  const auto seq = vocab.encode(before);
  const auto hits = std::count(seq.ids.begin(), seq.ids.end(), from_id);
  c.expect(hits == static_cast<std::ptrdiff_t>(occurrences),
           from + " occurs " + std::to_string(hits) + " times");
  const auto out = apply_plan(make_article(before), {{from_id, {to_id, 1.0}}}, vocab);
  c.expect(out.body == after, "'" + from + "' -> '" + to + "' does not reproduce the reference text");
}

void rewrite_invariant(Check& c) {
  SeededRng rng(4242);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto vocab = random_vocab(rng);
    const auto article = make_article(random_text(rng, 10 + rng.below(120)));
    const auto pieces = vocab.encode_pieces(article.body);
    std::set<TokenId> used;
    for (const auto& p : pieces) used.insert(p.id);
    ReplacementPlan plan;
    for (TokenId id : used) {
      if (vocab.is_special(id) || rng.below(3) != 0) continue;
      TokenId to = static_cast<TokenId>(rng.below(vocab.size()));
      if (to == id || vocab.is_special(to)) continue;
      plan.emplace(id, Replacement{to, 0.5});
    }
    const TokenSequence seq = vocab.encode(article.body);
    const auto rewritten = rewrite_tokens(seq, plan);
    c.expect(rewritten.ids.size() == seq.ids.size(), "token count changed");
    std::string expected;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      const bool mapped = plan.count(seq.ids[i]) != 0;
      c.expect(mapped || rewritten.ids[i] == seq.ids[i], "unmapped position changed");
      c.expect(!mapped || rewritten.ids[i] == plan.at(seq.ids[i]).to, "mapped position wrong");
      expected += mapped ? vocab.surface(rewritten.ids[i])
                         : article.body.substr(pieces[i].begin, pieces[i].length);
    }
    const auto out = apply_plan(article, plan, vocab);
    c.expect(out.body == expected, "trial " + std::to_string(trial) + ": rewritten text differs");
    c.expect(out.same_metadata(article), "metadata changed");
  }
  expect_reference_rewrite(c, "display_real.txt", "display_fake.txt", "researchers", "advoc", 2);
  expect_reference_rewrite(c, "tractor_fake.txt", "tractor_real.txt", "first", "Winchester", 3);
  c.note("1000 randomized plans; both reference article rewrites reproduced exactly");
}

std::string dump_spectrum(const Spectrum& sp) {
  std::ostringstream os;
  for (const auto& v : sp.variants) {
    auto j = article_to_json(v.article);
    j["step"] = v.step;
    j["fraction"] = v.fraction;
    j["splices"] = splices_to_json(v.splices);
    os << j.dump() << '\n';
  }
  return os.str();
}

bool fractions_non_decreasing(const Spectrum& sp) {
  for (std::size_t i = 1; i < sp.variants.size(); ++i)
    if (sp.variants[i].fraction < sp.variants[i - 1].fraction) return false;
  return true;
}

void spectrum_structure(Check& c) {
  SentenceGen gen(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = 1 + gen.below(12), s = 1 + gen.below(12);
    const auto target = make_article(join_sentences(gen.sentences(t)), Label::human);
    const auto source = make_article(join_sentences(gen.sentences(s)), Label::machine);
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);
    const std::string tag = "trial " + std::to_string(trial);

    SeededRng r1(seed);
    const auto sub = substitute_spectrum(target, source, r1);
    c.expect(sub.variants.size() == std::min(t, s) + 1, tag + ": substitute step count");
    for (const auto& v : sub.variants)
      c.expect(segment_sentences(v.article.body).size() == t, tag + ": substitute count");
    c.expect(fractions_non_decreasing(sub), tag + ": substitute fractions");

    SeededRng r2(seed);
    const auto ins = insert_spectrum(target, source, r2);
    for (const auto& v : ins.variants)
      c.expect(segment_sentences(v.article.body).size() == t + v.step, tag + ": insert count");
    c.expect(fractions_non_decreasing(ins), tag + ": insert fractions");

    const auto len = length_sweep(target);
    c.expect(len.variants.size() == t, tag + ": length variant count");
    for (const auto& v : len.variants)
      c.expect(segment_sentences(v.article.body).size() == v.step, tag + ": length count");
    c.expect(fractions_non_decreasing(len), tag + ": length fractions");

    const auto pos = position_sweep(target, segment_sentences(source.body).front());
    c.expect(pos.variants.size() == t + 1, tag + ": position variant count");
    c.expect(fractions_non_decreasing(pos), tag + ": position fractions");

    SeededRng r3(seed), r4(seed);
    c.expect(dump_spectrum(sub) == dump_spectrum(substitute_spectrum(target, source, r3)),
             tag + ": substitute not deterministic");
    c.expect(dump_spectrum(ins) == dump_spectrum(insert_spectrum(target, source, r4)),
             tag + ": insert not deterministic");
  }

  advtext::testing::TempDir dir;
  std::vector<Article> targets, sources;
  for (int i = 0; i < 6; ++i) targets.push_back(make_article(join_sentences(gen.sentences(6))));
  for (int i = 0; i < 3; ++i)
    sources.push_back(make_article(join_sentences(gen.sentences(5)), Label::machine));
  save_jsonl(targets, dir.file("t.jsonl"));
  save_jsonl(sources, dir.file("s.jsonl"));
  std::string first;
  for (int run = 0; run < 2; ++run) {
    CampaignConfig cfg;
    cfg.seed = 5;
    cfg.mode = SpectrumMode::insert;
    cfg.corpus = dir.file("t.jsonl");
    cfg.source_corpus = dir.file("s.jsonl");
    cfg.output_dir = dir.file("out" + std::to_string(run));
    cfg.parallelism = run == 0 ? 1 : 4;
    run_campaign(cfg);
    std::string bytes;
    for (const char* f : {"variants.jsonl", "curve.csv", "metrics.json"})
      bytes += advtext::testing::read_file(cfg.output_dir + "/" + f);
    if (run == 0) first = bytes;
    else c.expect(bytes == first, "campaign outputs differ between equal-seed runs");
  }
  c.note("100 random pairs across four spectrum kinds; equal-seed campaign outputs identical");
}

void provenance_trend(Check& c) {
  Classifier oracle({});
  SentenceGen gen(5);
  for (std::size_t t = 2; t <= 20; t += 2) {
    const auto real = make_article(join_sentences(gen.sentences(t)), Label::human);
    const auto fake = make_article(join_sentences(gen.sentences(t)), Label::machine);
    SeededRng rng(t);
    const auto sp = substitute_spectrum(real, fake, rng);
    ConfidenceCurve curve{"t" + std::to_string(t), {}};
    for (const auto& v : sp.variants) {
      const auto verdict = oracle.classify_one(v.article);
      curve.points.push_back({v.step, v.fraction, verdict.p_machine, verdict.p_human});
    }
    const auto& pts = curve.points;
    bool monotone = true;
    for (std::size_t i = 1; i < pts.size(); ++i) monotone = monotone && pts[i].p_machine >= pts[i - 1].p_machine;
    const std::string tag = "T=" + std::to_string(t);
    c.expect(monotone, tag + ": curve not monotone");
    c.expect(pts.front().p_machine == 0.0 && pts.back().p_machine == 1.0, tag + ": ends not 0 and 1");
    c.expect(flip_point(curve, 0.5) == (t + 1) / 2, tag + ": flip point");
  }
  c.note("T = 2..20 even: monotone 0 -> 1, flip at T/2");
}

ConfidenceCurve curve_of(const std::vector<double>& p) {
  ConfidenceCurve c{"c", {}};
  for (std::size_t i = 0; i < p.size(); ++i) c.points.push_back({i, 0.0, p[i], 1 - p[i]});
  return c;
}

void metric_examples(Check& c) {
  const auto rising = curve_of({0.2, 0.4, 0.7, 0.8, 0.9});
  c.expect(flip_point(rising) == 2u, "flip of rising curve");
  c.expect(usp(rising, 0.5, 5) == 40.0, "usp at step 2 of 5 is not 40.0");
  c.expect(flip_point(curve_of({0.6, 0.7, 0.9})) == 0u, "flip of all-machine curve");
  c.expect(!flip_point(curve_of({0.1, 0.2, 0.3})), "all-human curve has no flip");
  c.expect(!usp(curve_of({0.1, 0.2, 0.3})), "all-human curve has no usp");
  c.expect(flip_point(curve_of({0.6, 0.4, 0.7, 0.5})) == 2u, "flip after a dip");
  c.expect(hesitation_count(curve_of({0.4, 0.6, 0.4, 0.6})) == 3u, "hesitation of zigzag");
  c.expect(hesitation_count(rising) == 1u, "hesitation of rising curve");
  c.expect(hesitation_count(curve_of({0.5})) == 0u, "hesitation of single point");
  c.note("usp(flip 2 of 5) = " + format_double(usp(rising, 0.5, 5).value_or(-1)));
}

void protocol_fidelity(Check& c) {
  StubServer server;
  const auto ms = std::chrono::milliseconds(1);

  GeneratorEndpoint gen_ep;
  gen_ep.base_url = server.url();
  gen_ep.max_retries = 2;
  gen_ep.initial_backoff = ms;
  GeneratorClient gen(gen_ep);
  c.expect(gen.complete("Seed text.") == "GEN: Seed text.", "generator output");
  auto reqs = server.requests();
  c.expect(reqs.size() == 1 && reqs[0].path == "/generate" &&
               reqs[0].body == R"({"text":"Seed text."})",
           "generator request bytes");
  const auto gen_raw = post_json({server.url(), std::chrono::milliseconds(2000), 0, ms, {}},
                                 "/generate", R"({"text":"x"})");
  c.expect(gen_raw == R"({"output":"GEN: x"})", "generator response bytes: " + gen_raw);

  server.clear();
  server.fail_next(2);
  c.expect(gen.complete("Retry me.") == "GEN: Retry me.", "generator retry result");
  c.expect(server.count("/generate") == 3, "generator retry attempts");

  ClassifierEndpoint cls_ep;
  cls_ep.kind = ClassifierKind::remote;
  cls_ep.base_url = server.url();
  cls_ep.batch_size = 2;
  cls_ep.max_retries = 2;
  cls_ep.initial_backoff = ms;
  cls_ep.max_in_flight = 1;
  Classifier cls(cls_ep);
  server.clear();
  auto one = make_article("Short words here.", Label::human, "T");
  one.domain = "d.example";
  one.date = "2020-01-02";
  cls.classify_one(one);
  reqs = server.requests();
  c.expect(reqs.size() == 1 && reqs[0].path == "/classify" &&
               reqs[0].body ==
                   R"({"articles":[{"article":"Short words here.","authors":"Jane Roe, John Doe",)"
                   R"("date":"2020-01-02","domain":"d.example","title":"T"}]})",
           "classifier request bytes");
  const auto cls_raw =
      post_json({server.url(), std::chrono::milliseconds(2000), 0, ms, {}}, "/classify",
                canonical_json({{"articles", {classify_request_item(one)}}}));
  const auto cls_json = nlohmann::json::parse(cls_raw);
  c.expect(cls_json.size() == 1 && cls_json["results"].size() == 1 &&
               cls_json["results"][0].size() == 2 &&
               cls_json["results"][0].contains("p_machine") &&
               cls_json["results"][0].contains("p_human"),
           "classifier response shape: " + cls_raw);

  server.clear();
  server.fail_next(2);
  const auto retried = cls.classify_one(make_article("Another body to score."));
  c.expect(server.count("/classify") == 3, "classifier retry attempts");
  c.expect(retried.p_machine >= 0 && retried.p_machine <= 1, "classifier retry result");

  std::vector<Article> batch;
  SentenceGen sg(17);
  for (int i = 0; i < 5; ++i) batch.push_back(make_article(join_sentences(sg.sentences(3))));
  const auto cold = cls.classify_batch(batch);
  const auto before = cls.remote_calls();
  const auto warm = cls.classify_batch(batch);
  c.expect(cls.remote_calls() == before, "warm cache made remote calls");
  for (std::size_t i = 0; i < batch.size(); ++i)
    c.expect(cold[i].ok() && warm[i].ok() && *cold[i].verdict == *warm[i].verdict,
             "warm verdict differs");

  advtext::testing::TempDir dir;
  const auto path = dir.file("cassette.json");
  const auto article = make_article(join_sentences(sg.sentences(6)));
  std::string recorded;
  {
    GeneratorClient rec(gen_ep, std::make_shared<Cassette>(path, CassetteMode::record));
    SeededRng rng(3);
    recorded = dump_spectrum(generator_spectrum(article, rec, rng));
  }
  server.stop();
  GeneratorEndpoint dead = gen_ep;
  dead.base_url = "http://127.0.0.1:1";
  for (int run = 0; run < 2; ++run) {
    GeneratorClient rep(dead, std::make_shared<Cassette>(path, CassetteMode::replay));
    SeededRng rng(3);
    c.expect(dump_spectrum(generator_spectrum(article, rep, rng)) == recorded,
             "cassette replay differs from recording");
    c.expect(rep.network_calls() == 0, "replay touched the network");
  }
  c.note("byte shapes, 2 failures then success, 0 warm calls, offline replay identical");
}

std::string fuzz_sentence(SeededRng& rng) {
  static const char* kWords[] = {"utterly", "Great",   "bad,",   "\"terrible\"", "good",
                                 "plainly", "REPORTEDLY", "official.", "amazing!", "said",
                                 "the",     "river",   "(budget)", "it’s",     "x",
                                 "—",       "",        "42"};
  std::string s;
  const auto n = rng.below(15);
  for (std::uint64_t i = 0; i < n; ++i) s += std::string(kWords[rng.below(std::size(kWords))]) + " ";
  return s;
}

void subjectivity_ordering(Check& c) {
  const auto lex = load_subjectivity(advtext::testing::fixture("subjectivity.json"));
  SeededRng rng(8);
  SentenceGen gen(8);
  static const char* kLex[] = {"utterly", "great", "bad", "terrible", "good", "plainly",
                               "reportedly", "official", "amazing", "said"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> src;
    const auto s = 1 + rng.below(8);
    for (std::uint64_t i = 0; i < s; ++i) {
      std::string sentence = gen.word(true);
      for (std::uint64_t w = 0; w < 1 + rng.below(4); ++w)
        sentence += std::string(" ") + (rng.below(2) ? kLex[rng.below(std::size(kLex))] : gen.word(false));
      src.push_back(sentence + ".");
    }
    const auto target = make_article(join_sentences(gen.sentences(1 + gen.below(8))));
    const auto source = make_article(join_sentences(src), Label::machine);
    const SeededRng r(trial);
    const auto asc = subjectivity_ordered_insertion(target, source, lex, SortOrder::asc, r);
    const auto desc = subjectivity_ordered_insertion(target, source, lex, SortOrder::desc, r);

    const auto sentences = segment_sentences(source.body);
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < sentences.size(); ++i)
      if (sentence_subjectivity(sentences[i], lex) < sentence_subjectivity(sentences[argmin], lex))
        argmin = i;
    const auto& first = asc.variants.at(1).splices.at(0);
    c.expect(first.source == argmin, "trial " + std::to_string(trial) + ": asc did not insert the minimum first");

    auto a = segment_sentences(asc.variants.back().article.body);
    auto d = segment_sentences(desc.variants.back().article.body);
    std::sort(a.begin(), a.end());
    std::sort(d.begin(), d.end());
    c.expect(a == d, "trial " + std::to_string(trial) + ": asc/desc final multisets differ");
  }
  double lo = 1, hi = 0;
  std::string block;
  for (int i = 0; i < 10000; ++i) {
    const auto sentence = fuzz_sentence(rng);
    const double v = sentence_subjectivity(sentence, lex);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    c.expect(v >= 0.0 && v <= 1.0, "sentence score out of range: " + sentence);
    block += sentence + ". ";
    if (i % 50 == 49) {
      const auto art = make_article(block);
      for (auto mode : {SubjectivityMode::by_sentences, SubjectivityMode::whole}) {
        const double w = article_subjectivity(art, lex, mode);
        c.expect(w >= 0.0 && w <= 1.0, "article score out of range");
      }
      block.clear();
    }
  }
  c.note("200 ordering trials; 10000 fuzz sentences scored in [" + format_double(lo) + ", " +
         format_double(hi) + "]");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"pairing matches brute-force scan", pairing_oracle},
      {"adversarial table identities", adversarial_identities},
      {"token rewrite invariant and reference rewrites", rewrite_invariant},
      {"spectrum structure and determinism", spectrum_structure},
      {"provenance-oracle substitution trend", provenance_trend},
      {"metric examples", metric_examples},
      {"stub protocol fidelity", protocol_fidelity},
      {"subjectivity ordering and bounds", subjectivity_ordering},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok();
    std::cout << (c.ok() ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first
              << ": " << c.detail() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
