#pragma once

#include <map>
#include <string>
#include <string_view>

namespace sentcast {

// Flat key=value configuration ("section.key = value", '#' comments).
// Credentials never appear here: keys like *.api_key_env name the environment
// variable that holds the secret.
class Config {
 public:
  Config() = default;
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;  // ConfigError if absent
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Resolves the environment variable named by `key`'s value.
  std::string env_secret(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace sentcast
