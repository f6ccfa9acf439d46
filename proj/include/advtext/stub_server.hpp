#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "advtext/classify.hpp"
#include "httplib.h"
#include "json.hpp"

namespace advtext {

/// In-process reference services speaking the harness wire protocols:
///   POST /classify  {"articles": [...]} -> {"results": [{"p_machine", "p_human"}]}
///                   scored with the lexical stub
///   POST /generate  {"text": seed}      -> {"output": prefix + seed}
/// Failure injection makes the next N requests answer with `fail_status`.
class StubServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 = any free port
    std::string generation_prefix = "GEN: ";
    std::optional<std::string> fixed_generation;
    std::optional<std::string> required_api_key;
    int fail_status = 500;
  };

  struct Request {
    std::string path;
    std::string body;
    std::string api_key;
  };

  StubServer() : StubServer(Options{}) {}
  explicit StubServer(Options opt) : opt_(std::move(opt)) {
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      if (intercept(req, res)) return;
      handle_classify(req, res);
    });
    server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      if (intercept(req, res)) return;
      handle_generate(req, res);
    });
    port_ = opt_.port == 0 ? server_.bind_to_any_port(opt_.host)
                           : (server_.bind_to_port(opt_.host, opt_.port) ? opt_.port : -1);
    if (port_ <= 0) throw Error("stub server could not bind " + opt_.host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    while (!server_.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }

  ~StubServer() { stop(); }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  /// Blocks until stop() is called from another thread or a signal.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string url() const { return "http://" + opt_.host + ":" + std::to_string(port_); }

  void fail_next(int n) { fail_remaining_ = n; }

  std::size_t count(const std::string& path) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& r : requests_) n += r.path == path;
    return n;
  }

  std::vector<Request> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  void clear() {
    std::lock_guard lock(mu_);
    requests_.clear();
  }

 private:
  bool intercept(const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu_);
      requests_.push_back({req.path, req.body, req.get_header_value("api-key")});
    }
    if (opt_.required_api_key && req.get_header_value("api-key") != *opt_.required_api_key) {
      res.status = 401;
      res.set_content(R"({"error":"bad api key"})", "application/json");
      return true;
    }
    if (fail_remaining_.fetch_sub(1) > 0) {
      res.status = opt_.fail_status;
      res.set_content(R"({"error":"injected failure"})", "application/json");
      return true;
    }
    fail_remaining_.store(std::max(0, fail_remaining_.load()));
    return false;
  }

  static void bad_request(httplib::Response& res, const std::string& why) {
    res.status = 400;
    res.set_content(nlohmann::json{{"error", why}}.dump(), "application/json");
  }

  void handle_classify(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      return bad_request(res, "body is not JSON");
    }
    if (!j.contains("articles") || !j["articles"].is_array())
      return bad_request(res, "missing 'articles'");
    nlohmann::json out{{"results", nlohmann::json::array()}};
    for (const auto& a : j["articles"]) {
      for (const char* key : {"article", "title", "authors", "domain", "date"}) {
        if (!a.contains(key) || !a[key].is_string())
          return bad_request(res, std::string("article lacks string field '") + key + "'");
      }
      const double p = lexical_stub_score(a["article"].get<std::string>());
      out["results"].push_back({{"p_machine", p}, {"p_human", 1.0 - p}});
    }
    res.set_content(out.dump(), "application/json");
  }

  void handle_generate(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      return bad_request(res, "body is not JSON");
    }
    if (!j.contains("text") || !j["text"].is_string()) return bad_request(res, "missing 'text'");
    const std::string output =
        opt_.fixed_generation ? *opt_.fixed_generation
                              : opt_.generation_prefix + j["text"].get<std::string>();
    res.set_content(nlohmann::json{{"output", output}}.dump(), "application/json");
  }

  Options opt_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<int> fail_remaining_{0};
  mutable std::mutex mu_;
  std::vector<Request> requests_;
};

}  // namespace advtext
