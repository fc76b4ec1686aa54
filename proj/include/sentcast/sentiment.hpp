#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sentcast/config.hpp"
#include "sentcast/market_data.hpp"

namespace sentcast {

struct LlmSpec {
  std::string name;         // display label, e.g. "Qwen Turbo"
  std::string slug;         // file/column label, e.g. "qwen_turbo"
  std::string provider;     // "direct" or "gateway"
  std::string model_id;     // wire identifier sent in the request body
  std::string base_url;     // chat-completion endpoint root
  std::string api_key_env;  // environment variable holding the bearer token
};

// The ten models under comparison, in report order.
const std::vector<LlmSpec>& default_llm_specs();
const LlmSpec& llm_spec_by_name(const std::string& name_or_slug);

// Per-provider base-URL overrides from config (sentiment.openrouter_base_url,
// sentiment.deepseek_base_url, sentiment.dashscope_base_url).
std::vector<LlmSpec> apply_provider_overrides(std::vector<LlmSpec> specs, const Config& cfg);

enum class Label { negative, neutral, positive };
const char* to_string(Label label);

std::string build_prompt(const std::string& title);
double parse_score(const std::string& response_text);  // ParseError / DataError
Label classify(double score);

// Deterministic offline stand-in for the chat APIs: a stable hash of
// (model, title) quantized to 0.05 steps in [0,1], rendered as the bare
// decimal the prompt demands.
std::string mock_completion(const std::string& model_name, const std::string& title);

struct ScoreResult {
  std::optional<double> score;
  std::string error;  // failure reason when score is absent
};

using CompletionFn =
    std::function<std::string(const LlmSpec& spec, const std::string& prompt)>;

CompletionFn make_mock_provider();
// POST {base_url}/chat/completions with {model, messages:[{role:"user",...}]};
// transport retries are handled by score_articles, not inside the client.
CompletionFn make_http_provider(const Config& cfg);

struct RetryPolicy {
  int attempts = 3;
  int backoff_ms = 500;
};

// One score per article for one LLM; output order matches input order no
// matter how the up-to-max_in_flight worker threads interleave.  Transport,
// format, and range failures are retried, then recorded as missing.
std::vector<ScoreResult> score_articles(const std::vector<NewsArticle>& articles,
                                        const LlmSpec& spec, const CompletionFn& provider,
                                        int max_in_flight = 50, RetryPolicy retry = {});

// sentiment.csv: article_id,title,<one score column per LLM slug>.
// Missing scores serialize as empty fields; the loader enforces [0,1].
struct SentimentTable {
  std::vector<std::string> article_ids;
  std::vector<std::string> titles;
  std::vector<std::string> llm_slugs;
  std::vector<std::vector<std::optional<double>>> scores;  // [article][llm]
};

void write_sentiment_csv(const std::string& path, const SentimentTable& table);
SentimentTable load_sentiment_csv(const std::string& path);

}  // namespace sentcast
