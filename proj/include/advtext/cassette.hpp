#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "advtext/errors.hpp"
#include "advtext/hash.hpp"
#include "json.hpp"

namespace advtext {

enum class CassetteMode {
  off,     // always call the network, store nothing
  record,  // call the network on a miss and store the answer
  replay,  // never call the network; a miss is an error
};

inline CassetteMode parse_cassette_mode(const std::string& s) {
  if (s == "off") return CassetteMode::off;
  if (s == "record") return CassetteMode::record;
  if (s == "replay") return CassetteMode::replay;
  throw ParseError("unknown cassette mode '" + s + "'");
}

/// Request -> response store keyed by the hex SHA-256 of the canonical
/// request JSON. File layout:
///   {"format": "advtext-cassette", "version": 1,
///    "interactions": {"<sha256>": {"request": {...}, "response": {...}}}}
/// Lookups may run concurrently; writes are serialized and each one
/// rewrites the file atomically.
class Cassette {
 public:
  Cassette() = default;
  Cassette(std::string path, CassetteMode mode) : path_(std::move(path)), mode_(mode) {
    if (!path_.empty() && std::filesystem::exists(path_)) load();
    else if (mode_ == CassetteMode::replay)
      throw ParseError("cassette " + path_ + " does not exist");
  }

  CassetteMode mode() const noexcept { return mode_; }
  const std::string& path() const noexcept { return path_; }

  static std::string key(const nlohmann::json& request) { return sha256_json(request); }

  std::optional<nlohmann::json> lookup(const nlohmann::json& request) const {
    if (mode_ == CassetteMode::off) return std::nullopt;
    std::lock_guard lock(mu_);
    auto it = interactions_.find(key(request));
    if (it == interactions_.end()) return std::nullopt;
    return it->second.at("response");
  }

  void record(const nlohmann::json& request, const nlohmann::json& response) {
    if (mode_ != CassetteMode::record) return;
    std::lock_guard lock(mu_);
    interactions_[key(request)] = {{"request", request}, {"response", response}};
    if (!path_.empty()) save_locked();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return interactions_.size();
  }

 private:
  void load() {
    std::ifstream in(path_);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path_ + ": " + e.what());
    }
    if (!j.contains("interactions") || !j.at("interactions").is_object())
      throw ParseError(path_ + ": not a cassette file");
    for (const auto& [k, v] : j.at("interactions").items()) interactions_[k] = v;
  }

  void save_locked() const {
    nlohmann::json j{{"format", "advtext-cassette"}, {"version", 1}};
    j["interactions"] = nlohmann::json::object();
    for (const auto& [k, v] : interactions_) j["interactions"][k] = v;
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write cassette " + tmp);
      out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path_);
  }

  std::string path_;
  CassetteMode mode_ = CassetteMode::off;
  mutable std::mutex mu_;
  std::map<std::string, nlohmann::json> interactions_;
};

}  // namespace advtext
