#include "sentcast/config.hpp"

#include <cstdlib>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

Config Config::parse(std::string_view text) {
  Config cfg;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;

    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  return parse(read_file(path));
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required config key: " + key);
  return it->second;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return parse_int(it->second);
  } catch (const ParseError&) {
    throw ConfigError("config key " + key + ": expected integer, got '" + it->second + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return parse_double(it->second);
  } catch (const ParseError&) {
    throw ConfigError("config key " + key + ": expected number, got '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + ": expected boolean, got '" + v + "'");
}

std::string Config::env_secret(const std::string& key) const {
  std::string var = require_str(key);
  const char* val = std::getenv(var.c_str());
  if (!val || !*val)
    throw ConfigError("environment variable " + var + " (named by " + key + ") is not set");
  return val;
}

}  // namespace sentcast
