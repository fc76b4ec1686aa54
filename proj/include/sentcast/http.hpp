#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace sentcast {

struct HttpOptions {
  int attempts = 3;        // total tries for retryable failures
  int backoff_ms = 500;    // first retry delay, doubled each attempt
  int timeout_s = 30;
};

// Minimal JSON-over-HTTP client.  Stateless per call (a fresh connection each
// request) so instances are safe to share across scoring threads.  Connection
// failures, 429 and 5xx responses are retried with exponential backoff;
// 401/403 raise ConfigError immediately (bad credentials never heal); other
// statuses raise TransportError.
class HttpJson {
 public:
  using Headers = std::map<std::string, std::string>;

  explicit HttpJson(std::string base_url, HttpOptions opt = {});

  nlohmann::json get(const std::string& path_and_query, const Headers& headers = {}) const;
  nlohmann::json post(const std::string& path, const nlohmann::json& body,
                      const Headers& headers = {}) const;

  const std::string& base_url() const { return base_url_; }

 private:
  nlohmann::json request(bool is_post, const std::string& path, const std::string& body,
                         const Headers& headers) const;

  std::string base_url_;   // scheme://host[:port]
  std::string prefix_;     // path prefix from the configured base URL
  HttpOptions opt_;
};

}  // namespace sentcast
