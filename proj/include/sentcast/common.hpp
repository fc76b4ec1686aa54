#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sentcast {

// Every failure the engine raises derives from Error so callers (and the CLI
// exit-code mapping) can dispatch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind { input, parse, data, config, dimension, transport, dependency, internal };
  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

#define SENTCAST_DEFINE_ERROR(NAME, KIND)                                 \
  class NAME : public Error {                                             \
   public:                                                                \
    explicit NAME(const std::string& m) : Error(Kind::KIND, m) {}         \
  }

SENTCAST_DEFINE_ERROR(InputError, input);
SENTCAST_DEFINE_ERROR(ParseError, parse);
SENTCAST_DEFINE_ERROR(DataError, data);
SENTCAST_DEFINE_ERROR(ConfigError, config);
SENTCAST_DEFINE_ERROR(DimensionError, dimension);
SENTCAST_DEFINE_ERROR(TransportError, transport);
SENTCAST_DEFINE_ERROR(DependencyError, dependency);
SENTCAST_DEFINE_ERROR(InternalError, internal);

#undef SENTCAST_DEFINE_ERROR

// FNV-1a, used for dataset hashes in manifests and the mock scorer.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// File-name slug for an LLM label: lowercase, runs of non-alphanumerics
// collapse to single underscores ("GPT-4o Mini" -> "gpt_4o_mini").
inline std::string slugify(std::string_view name) {
  std::string out;
  bool pending_sep = false;
  for (char c : name) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += c;
    } else if (c >= 'A' && c <= 'Z') {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += static_cast<char>(c - 'A' + 'a');
    } else {
      pending_sep = true;
    }
  }
  return out;
}

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace sentcast
