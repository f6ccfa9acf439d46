#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "advtext/errors.hpp"
#include "json.hpp"

namespace advtext {

using TokenId = std::uint32_t;

struct TokenSequence {
  std::vector<TokenId> ids;
  bool operator==(const TokenSequence&) const = default;
};

/// One encoded token together with the byte span of the source text it
/// covers. Unknown characters keep their original bytes here even though
/// their id is the unknown id.
struct TokenPiece {
  TokenId id;
  std::size_t begin;
  std::size_t length;
};

inline constexpr std::string_view kDefaultSpaceMarker = "␣";
inline constexpr std::string_view kDefaultUnknownToken = "<unk>";

namespace detail {

inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

inline std::string replace_all(std::string s, std::string_view from,
                               std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace detail

/// Token strings indexed by dense id. Tokens are stored in "marked" form:
/// a leading-space variant carries the space marker (default "␣") in place
/// of the space, so "␣a" and "a" are distinct tokens. Encoding is greedy
/// longest match over the unmarked surface strings.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens,
             std::optional<TokenId> unk_id = std::nullopt,
             std::set<TokenId> special_ids = {},
             std::string space_marker = std::string(kDefaultSpaceMarker))
      : tokens_(std::move(tokens)),
        special_(std::move(special_ids)),
        marker_(std::move(space_marker)) {
    if (!unk_id) {
      tokens_.emplace_back(kDefaultUnknownToken);
      unk_id = static_cast<TokenId>(tokens_.size() - 1);
    }
    if (*unk_id >= tokens_.size())
      throw ParseError("unknown-token id out of range");
    unk_ = *unk_id;
    special_.insert(unk_);
    for (TokenId s : special_)
      if (s >= tokens_.size()) throw ParseError("special id out of range");

    surfaces_.reserve(tokens_.size());
    std::set<std::string_view> seen;
    for (TokenId id = 0; id < tokens_.size(); ++id) {
      const auto& t = tokens_[id];
      if (t.empty()) throw ParseError("empty token at id " + std::to_string(id));
      if (!seen.insert(t).second)
        throw ParseError("duplicate token '" + t + "'");
      surfaces_.push_back(detail::replace_all(t, marker_, " "));
    }
    for (TokenId id = 0; id < surfaces_.size(); ++id) {
      if (!lookup_.emplace(surfaces_[id], id).second)
        throw ParseError("tokens '" + tokens_[id] +
                         "' and another share the same surface form");
      max_len_ = std::max(max_len_, surfaces_[id].size());
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId unk_id() const noexcept { return unk_; }
  const std::set<TokenId>& special_ids() const noexcept { return special_; }
  bool is_special(TokenId id) const { return special_.count(id) != 0; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::string& surface(TokenId id) const { return surfaces_.at(id); }
  const std::string& space_marker() const noexcept { return marker_; }

  std::optional<TokenId> find(std::string_view marked_token) const {
    auto it = lookup_.find(detail::replace_all(std::string(marked_token),
                                               marker_, " "));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<TokenPiece> encode_pieces(std::string_view text) const {
    std::vector<TokenPiece> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t len = std::min(max_len_, text.size() - pos);
      bool matched = false;
      for (; len > 0; --len) {
        auto it = lookup_.find(std::string(text.substr(pos, len)));
        if (it != lookup_.end()) {
          out.push_back({it->second, pos, len});
          matched = true;
          break;
        }
      }
      if (!matched) {
        len = std::min(detail::utf8_length(static_cast<unsigned char>(text[pos])),
                       text.size() - pos);
        out.push_back({unk_, pos, len});
      }
      pos += len;
    }
    return out;
  }

  TokenSequence encode(std::string_view text) const {
    TokenSequence seq;
    for (const auto& p : encode_pieces(text)) seq.ids.push_back(p.id);
    return seq;
  }

  /// Concatenates surface strings; never fails on in-range ids.
  std::string decode(const TokenSequence& seq) const {
    std::string out;
    for (TokenId id : seq.ids) out += surfaces_.at(id);
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> lookup_;
  std::set<TokenId> special_;
  std::string marker_;
  TokenId unk_ = 0;
  std::size_t max_len_ = 0;
};

/// Vocabulary file: UTF-8, one token per line, line number = id. Optional
/// sidecar JSON: {"unk": id, "special": [ids], "space_marker": "␣"}.
inline Vocabulary load_vocabulary(const std::string& path,
                                  const std::string& sidecar_path = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  std::optional<TokenId> unk;
  std::set<TokenId> special;
  std::string marker(kDefaultSpaceMarker);
  if (!sidecar_path.empty()) {
    std::ifstream side(sidecar_path);
    if (!side) throw ParseError("cannot open vocabulary sidecar " + sidecar_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(side);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(sidecar_path + ": " + e.what());
    }
    if (j.contains("unk")) unk = j.at("unk").get<TokenId>();
    if (j.contains("special"))
      for (const auto& s : j.at("special")) special.insert(s.get<TokenId>());
    if (j.contains("space_marker")) marker = j.at("space_marker").get<std::string>();
  }
  return Vocabulary(std::move(tokens), unk, std::move(special), std::move(marker));
}

}  // namespace advtext
