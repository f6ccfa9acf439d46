#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/errors.hpp"
#include "advtext/text.hpp"
#include "json.hpp"

namespace advtext {

enum class Label { human, machine, unknown };

/// Origin of one sentence of a body.
enum class Provenance { human, machine, generated };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::human: return "human";
    case Label::machine: return "machine";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::human: return "human";
    case Provenance::machine: return "machine";
    case Provenance::generated: return "generated";
  }
  return "human";
}

inline Label parse_label(std::string_view s) {
  if (s == "human") return Label::human;
  if (s == "machine") return Label::machine;
  if (s == "unknown") return Label::unknown;
  throw ParseError("unknown label '" + std::string(s) + "'");
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "human") return Provenance::human;
  if (s == "machine") return Provenance::machine;
  if (s == "generated") return Provenance::generated;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

/// One news item: the five metadata fields a discriminator consumes plus
/// bookkeeping. `extras` carries unknown JSONL keys through a round trip.
struct Article {
  std::string domain;
  std::string date;
  std::vector<std::string> authors;
  std::string title;
  std::string body;
  Label label = Label::unknown;
  std::optional<std::vector<Provenance>> sentence_provenance;
  std::optional<std::string> split;
  nlohmann::json extras = nlohmann::json::object();

  bool operator==(const Article&) const = default;

  bool same_metadata(const Article& o) const {
    return domain == o.domain && date == o.date && authors == o.authors &&
           title == o.title;
  }
};

/// Per-sentence origin: explicit provenance when present, otherwise the
/// article label broadcast to every sentence. nullopt when neither is known.
inline std::optional<std::vector<Provenance>> sentence_origins(
    const Article& a, std::size_t sentence_count) {
  if (a.sentence_provenance && a.sentence_provenance->size() == sentence_count)
    return a.sentence_provenance;
  if (a.label == Label::unknown) return std::nullopt;
  return std::vector<Provenance>(sentence_count, a.label == Label::machine
                                                     ? Provenance::machine
                                                     : Provenance::human);
}

enum class BodyKey { article, text };
enum class AuthorsAs { list, joined_string };

inline constexpr std::string_view kAuthorSeparator = ", ";

inline std::vector<std::string> split_authors(std::string_view joined) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= joined.size()) {
    const std::size_t comma = std::min(joined.find(',', pos), joined.size());
    std::string name = trim(joined.substr(pos, comma - pos));
    if (!name.empty()) out.push_back(std::move(name));
    pos = comma + 1;
  }
  return out;
}

inline std::string join_authors(const std::vector<std::string>& authors) {
  return join(authors, kAuthorSeparator);
}

namespace detail {

inline const nlohmann::json* find_key(const nlohmann::json& obj,
                                      std::string_view key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline std::string string_field(const nlohmann::json& obj,
                                std::string_view key) {
  const auto* v = find_key(obj, key);
  if (!v || v->is_null()) return {};
  if (!v->is_string())
    throw ParseError("field '" + std::string(key) + "' is not a string");
  return v->get<std::string>();
}

inline bool is_core_key(std::string_view k) {
  return k == "article" || k == "text" || k == "title" || k == "authors" ||
         k == "domain" || k == "date" || k == "label" || k == "split" ||
         k == "sentence_provenance";
}

}  // namespace detail

/// Builds an Article from one parsed JSON record. Body may live under
/// "article" or "text"; if both are present "article" wins and "text" is
/// kept as an extra.
inline Article article_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw ParseError("record is not a JSON object");
  Article a;
  const auto* body = detail::find_key(obj, "article");
  const bool body_is_article = body != nullptr;
  if (!body) body = detail::find_key(obj, "text");
  if (!body || !body->is_string())
    throw ParseError("record has no 'article' or 'text' body");
  a.body = body->get<std::string>();
  a.title = detail::string_field(obj, "title");
  a.domain = detail::string_field(obj, "domain");
  a.date = detail::string_field(obj, "date");
  if (const auto* au = detail::find_key(obj, "authors")) {
    if (au->is_string()) {
      a.authors = split_authors(au->get<std::string>());
    } else if (au->is_array()) {
      for (const auto& name : *au) {
        if (!name.is_string()) throw ParseError("author entry is not a string");
        a.authors.push_back(name.get<std::string>());
      }
    } else if (!au->is_null()) {
      throw ParseError("'authors' must be a list or a string");
    }
  }
  if (const auto* l = detail::find_key(obj, "label"); l && !l->is_null())
    a.label = parse_label(l->get<std::string>());
  if (const auto* s = detail::find_key(obj, "split"); s && s->is_string())
    a.split = s->get<std::string>();
  if (const auto* p = detail::find_key(obj, "sentence_provenance");
      p && p->is_array()) {
    std::vector<Provenance> prov;
    for (const auto& x : *p) prov.push_back(parse_provenance(x.get<std::string>()));
    a.sentence_provenance = std::move(prov);
  }
  for (const auto& [k, v] : obj.items()) {
    if (!detail::is_core_key(k) || (k == "text" && body_is_article))
      a.extras[k] = v;
  }
  return a;
}

inline nlohmann::json article_to_json(const Article& a,
                                      BodyKey body_key = BodyKey::article,
                                      AuthorsAs authors_as = AuthorsAs::list) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : a.extras.items()) j[k] = v;
  j[body_key == BodyKey::article ? "article" : "text"] = a.body;
  j["title"] = a.title;
  j["domain"] = a.domain;
  j["date"] = a.date;
  if (authors_as == AuthorsAs::joined_string)
    j["authors"] = join_authors(a.authors);
  else
    j["authors"] = a.authors;
  if (a.label != Label::unknown) j["label"] = to_string(a.label);
  if (a.split) j["split"] = *a.split;
  if (a.sentence_provenance) {
    auto arr = nlohmann::json::array();
    for (auto p : *a.sentence_provenance) arr.push_back(to_string(p));
    j["sentence_provenance"] = std::move(arr);
  }
  return j;
}

inline std::vector<Article> parse_jsonl(std::istream& in,
                                        const std::string& origin = "<stream>") {
  std::vector<Article> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(origin + ":" + std::to_string(line_no) +
                       ": malformed JSON: " + e.what());
    }
    try {
      out.push_back(article_from_json(obj));
    } catch (const ParseError& e) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": record " +
                       std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Article> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_jsonl(in, path);
}

inline void write_jsonl(std::ostream& out, const std::vector<Article>& articles,
                        BodyKey body_key = BodyKey::article,
                        AuthorsAs authors_as = AuthorsAs::list) {
  for (const auto& a : articles)
    out << article_to_json(a, body_key, authors_as).dump() << '\n';
}

inline void save_jsonl(const std::vector<Article>& articles,
                       const std::string& path,
                       BodyKey body_key = BodyKey::article,
                       AuthorsAs authors_as = AuthorsAs::list) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  write_jsonl(out, articles, body_key, authors_as);
  if (!out) throw Error("write failed for " + path);
}

}  // namespace advtext
