#include "sentcast/http.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "sentcast/common.hpp"

namespace sentcast {

HttpJson::HttpJson(std::string base_url, HttpOptions opt) : opt_(opt) {
  // Split scheme://host[:port]/prefix into origin and path prefix.
  size_t scheme = base_url.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("base URL must include a scheme: " + base_url);
  size_t path = base_url.find('/', scheme + 3);
  if (path == std::string::npos) {
    base_url_ = base_url;
  } else {
    base_url_ = base_url.substr(0, path);
    prefix_ = base_url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

nlohmann::json HttpJson::get(const std::string& path_and_query, const Headers& headers) const {
  return request(false, path_and_query, {}, headers);
}

nlohmann::json HttpJson::post(const std::string& path, const nlohmann::json& body,
                              const Headers& headers) const {
  return request(true, path, body.dump(), headers);
}

nlohmann::json HttpJson::request(bool is_post, const std::string& path, const std::string& body,
                                 const Headers& headers) const {
  std::string full_path = prefix_ + path;
  int delay = opt_.backoff_ms;
  std::string last_failure;

  for (int attempt = 1; attempt <= opt_.attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }

    httplib::Client cli(base_url_);
    cli.set_connection_timeout(opt_.timeout_s);
    cli.set_read_timeout(opt_.timeout_s);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    httplib::Result res = is_post ? cli.Post(full_path, h, body, "application/json")
                                  : cli.Get(full_path, h);
    if (!res) {
      last_failure = "connection error (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw ConfigError("HTTP " + std::to_string(res->status) + " from " + base_url_ + full_path +
                        " (check API credentials)");
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_url_ + full_path);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError("invalid JSON from " + base_url_ + full_path + ": " + e.what());
    }
  }
  throw TransportError("request to " + base_url_ + full_path + " failed after " +
                       std::to_string(opt_.attempts) + " attempts: " + last_failure);
}

}  // namespace sentcast
