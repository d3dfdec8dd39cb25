#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"

namespace cwu {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Connection-level failure (refused, timeout, DNS, TLS); retryable.
class TransportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParsedUrl {
  std::string base;         // scheme://host[:port]
  std::string path_prefix;  // "" or "/v1" style prefix
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, ""};
  }
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

inline std::string read_env(const std::string& name) {
  const char* v = name.empty() ? nullptr : std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

inline httplib::Headers bearer_auth_headers(const std::string& api_key_env) {
  httplib::Headers headers;
  const std::string key = read_env(api_key_env);
  if (!key.empty()) {
    headers.emplace("Authorization", "Bearer " + key);
  }
  return headers;
}

inline HttpResponse post_json(const std::string& endpoint_url, const std::string& path,
                              const httplib::Headers& headers, const std::string& body,
                              int timeout_sec) {
  const ParsedUrl url = parse_url(endpoint_url);
  httplib::Client client(url.base);
  client.set_connection_timeout(timeout_sec, 0);
  client.set_read_timeout(timeout_sec, 0);
  client.set_write_timeout(timeout_sec, 0);
  auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint_url + path + " failed: " +
                         httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace cwu
