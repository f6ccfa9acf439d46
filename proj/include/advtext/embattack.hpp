#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/errors.hpp"
#include "advtext/text.hpp"
#include "advtext/vocab.hpp"
#include "json.hpp"

namespace advtext {

/// Row-major rows x cols float32 matrix; row i belongs to token id i.
/// The tag keeps embedding and gradient tables from being swapped.
template <class Tag>
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Table() = default;
  Table(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}
  Table(std::size_t r, std::size_t c, std::vector<float> v)
      : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) throw ShapeError("table value count != rows*cols");
  }

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }

  bool operator==(const Table&) const = default;
};

struct EmbeddingTag {};
struct GradientTag {};
using EmbeddingTable = Table<EmbeddingTag>;
using GradientTable = Table<GradientTag>;

inline constexpr double kDefaultSimilarityThreshold = 0.18;
inline constexpr std::array<double, 4> kDefaultEpsilonGrid = {0.001, 0.1, 1.0, 5.0};

struct AttackConfig {
  double epsilon = 1.0;
  double threshold = kDefaultSimilarityThreshold;
  std::set<TokenId> excluded_ids;

  void validate() const {
    if (!(threshold >= -1.0 && threshold <= 1.0))
      throw PreconditionError("similarity threshold must lie in [-1, 1]");
    if (!std::isfinite(epsilon)) throw PreconditionError("epsilon must be finite");
  }
};

struct Replacement {
  TokenId to;
  double similarity;
  bool operator==(const Replacement&) const = default;
};

/// Source token id -> replacement; never maps an id to itself.
using ReplacementPlan = std::map<TokenId, Replacement>;

namespace detail {

inline std::vector<float> parse_float_row(std::string_view line, std::size_t expected,
                                          std::size_t line_no, const std::string& path) {
  std::vector<float> row;
  row.reserve(expected);
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (true) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    float v = 0.0f;
    const char* start = p;
    if (*start == '+') ++start;
    auto [next, ec] = std::from_chars(start, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    if (!std::isfinite(v))
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite value");
    row.push_back(v);
    p = next;
  }
  if (row.size() != expected)
    throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(expected) + " values, found " +
                     std::to_string(row.size()));
  return row;
}

}  // namespace detail

/// Text matrix: first line "V D", then V lines of D whitespace-separated
/// decimals, row order = token id order.
template <class Tag>
Table<Tag> parse_matrix(std::istream& in, const std::string& path = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  {
    const std::string header = trim(line);
    const char* p = header.data();
    const char* end = p + header.size();
    auto r1 = std::from_chars(p, end, rows);
    while (r1.ptr < end && *r1.ptr == ' ') ++r1.ptr;
    auto r2 = std::from_chars(r1.ptr, end, cols);
    if (header.empty() || r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != end)
      throw ParseError(path + ": header must be \"V D\"");
    if (cols == 0) throw ParseError(path + ": D must be > 0");
  }
  std::vector<float> values;
  values.reserve(rows * cols);
  std::size_t read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (read == rows)
      throw ParseError(path + ": more rows than the header's " + std::to_string(rows));
    auto row = detail::parse_float_row(line, cols, line_no, path);
    values.insert(values.end(), row.begin(), row.end());
    ++read;
  }
  if (read != rows)
    throw ParseError(path + ": header declares " + std::to_string(rows) + " rows, found " +
                     std::to_string(read));
  return Table<Tag>(rows, cols, std::move(values));
}

template <class Tag>
Table<Tag> load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix " + path);
  return parse_matrix<Tag>(in, path);
}

template <class Tag>
void write_matrix(std::ostream& out, const Table<Tag>& t) {
  out << t.rows << ' ' << t.cols << '\n';
  std::array<char, 32> buf{};
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), t.values[r * t.cols + c]);
      if (c) out << ' ';
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

inline void require_paired(const EmbeddingTable& e, const GradientTable& g) {
  if (e.rows != g.rows || e.cols != g.cols)
    throw ShapeError("embedding table is " + std::to_string(e.rows) + "x" +
                     std::to_string(e.cols) + " but gradient table is " +
                     std::to_string(g.rows) + "x" + std::to_string(g.cols));
}

/// One adversarial coordinate: e + epsilon*g evaluated in double, stored
/// as float32.
inline float adversarial_value(float e, float g, double epsilon) {
  return static_cast<float>(static_cast<double>(e) + epsilon * static_cast<double>(g));
}

/// E + epsilon*G elementwise, with the raw (unsigned) gradient.
inline EmbeddingTable adversarial_table(const EmbeddingTable& e, const GradientTable& g,
                                        double epsilon) {
  require_paired(e, g);
  if (epsilon == 0.0) return e;
  EmbeddingTable out(e.rows, e.cols);
  for (std::size_t i = 0; i < e.values.size(); ++i)
    out.values[i] = adversarial_value(e.values[i], g.values[i], epsilon);
  return out;
}

inline double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

inline double dot(std::span<const float> u, std::span<const float> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return s;
}

inline constexpr double kNoSimilarity = -std::numeric_limits<double>::infinity();

/// dot(u,v)/(|u||v|); a zero-norm side yields kNoSimilarity, which no
/// comparison ever selects.
inline double cosine_sim(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw ShapeError("cosine of vectors with different lengths");
  const double nu = l2_norm(u), nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) return kNoSimilarity;
  return dot(u, v) / (nu * nv);
}

/// For every used, non-excluded token t, the candidate c != t whose
/// original embedding is most cosine-similar to t's adversarial embedding
/// E[t] + eps*G[t]. Ties go to the smallest id. The pair is kept only when
/// the similarity is strictly above the threshold.
inline ReplacementPlan find_token_pairs(const EmbeddingTable& e, const GradientTable& g,
                                        const AttackConfig& cfg,
                                        const std::set<TokenId>& tokens_used) {
  require_paired(e, g);
  cfg.validate();
  std::vector<double> norms(e.rows);
  for (std::size_t c = 0; c < e.rows; ++c) norms[c] = l2_norm(e.row(c));

  ReplacementPlan plan;
  std::vector<float> query(e.cols);
  for (TokenId t : tokens_used) {
    if (t >= e.rows)
      throw PreconditionError("token id " + std::to_string(t) + " outside the table");
    if (cfg.excluded_ids.count(t)) continue;
    const auto et = e.row(t), gt = g.row(t);
    for (std::size_t d = 0; d < e.cols; ++d)
      query[d] = adversarial_value(et[d], gt[d], cfg.epsilon);
    const double qn = l2_norm(query);
    if (qn == 0.0) continue;

    double best = kNoSimilarity;
    std::optional<TokenId> best_id;
    for (std::size_t c = 0; c < e.rows; ++c) {
      if (c == t || norms[c] == 0.0 || cfg.excluded_ids.count(static_cast<TokenId>(c)))
        continue;
      const double sim = dot(e.row(c), query) / (norms[c] * qn);
      if (sim > best) {
        best = sim;
        best_id = static_cast<TokenId>(c);
      }
    }
    if (best_id && best > cfg.threshold) plan.emplace(t, Replacement{*best_id, best});
  }
  return plan;
}

inline TokenSequence rewrite_tokens(const TokenSequence& seq, const ReplacementPlan& plan) {
  TokenSequence out = seq;
  for (auto& id : out.ids)
    if (auto it = plan.find(id); it != plan.end()) id = it->second.to;
  return out;
}

/// Token-for-token rewrite of the body. Characters the vocabulary cannot
/// encode keep their original bytes.
inline Article apply_plan(const Article& article, const ReplacementPlan& plan,
                          const Vocabulary& vocab) {
  if (plan.empty()) return article;
  std::string body;
  body.reserve(article.body.size());
  for (const auto& piece : vocab.encode_pieces(article.body)) {
    if (auto it = plan.find(piece.id); it != plan.end())
      body += vocab.surface(it->second.to);
    else
      body.append(article.body, piece.begin, piece.length);
  }
  Article out = article;
  out.body = std::move(body);
  if (out.sentence_provenance &&
      out.sentence_provenance->size() != segment_sentences(out.body).size())
    out.sentence_provenance.reset();
  return out;
}

struct AttackResult {
  Article article;
  ReplacementPlan plan;
};

/// find_token_pairs over the distinct ids of encode(body), then apply_plan.
/// The vocabulary's special ids are always excluded.
inline AttackResult attack(const Article& article, const EmbeddingTable& e,
                           const GradientTable& g, const AttackConfig& cfg,
                           const Vocabulary& vocab) {
  require_paired(e, g);
  if (e.rows != vocab.size())
    throw ShapeError("embedding table has " + std::to_string(e.rows) +
                     " rows but the vocabulary has " + std::to_string(vocab.size()) +
                     " tokens");
  AttackConfig effective = cfg;
  effective.excluded_ids.insert(vocab.special_ids().begin(), vocab.special_ids().end());
  const auto seq = vocab.encode(article.body);
  const std::set<TokenId> used(seq.ids.begin(), seq.ids.end());
  auto plan = find_token_pairs(e, g, effective, used);
  return {apply_plan(article, plan, vocab), std::move(plan)};
}

/// Audit record: [{from_id, to_id, from_token, to_token, similarity}].
inline nlohmann::json plan_to_json(const ReplacementPlan& plan, const Vocabulary& vocab) {
  auto arr = nlohmann::json::array();
  for (const auto& [from, r] : plan) {
    arr.push_back({{"from_id", from},
                   {"to_id", r.to},
                   {"from_token", vocab.token(from)},
                   {"to_token", vocab.token(r.to)},
                   {"similarity", r.similarity}});
  }
  return arr;
}

}  // namespace advtext
