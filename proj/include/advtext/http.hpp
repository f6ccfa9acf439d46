#pragma once

#include <chrono>
#include <string>
#include <thread>
#include <utility>

#include "advtext/errors.hpp"
#include "httplib.h"

namespace advtext {

/// Where and how to POST. `base_url` may carry a path prefix
/// ("http://host:8080/api").
struct HttpTarget {
  std::string base_url;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  httplib::Headers headers;
};

namespace detail {

inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

inline bool is_transient_status(int status) { return status >= 500 || status == 429; }

}  // namespace detail

/// POSTs a JSON body and returns the response body of the first 2xx answer.
/// Transport failures, 5xx and 429 are retried with exponential backoff up to
/// max_retries extra attempts; other statuses fail immediately.
inline std::string post_json(const HttpTarget& target, const std::string& path,
                             const std::string& body) {
  if (target.max_retries < 0) throw PreconditionError("max_retries must be >= 0");
  const auto [host, prefix] = detail::split_base_url(target.base_url);
  const std::string full_path = prefix + path;
  auto backoff = target.initial_backoff;
  std::string last_error;
  const int attempts = target.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(host);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(target.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(target.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(full_path, target.headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else if (detail::is_transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    } else {
      throw ProtocolError(res->status, res->body,
                          "POST " + target.base_url + path + " returned HTTP " +
                              std::to_string(res->status));
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("POST " + target.base_url + path + " failed after " +
                       std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace advtext
