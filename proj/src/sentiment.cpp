#include "sentcast/sentiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"
#include "sentcast/http.hpp"

namespace sentcast {

namespace {

constexpr const char* kOpenRouter = "https://openrouter.ai/api/v1";
constexpr const char* kPromptInstruction =
    "You are a sentiment analysis AI. Return only a numeric sentiment score between 0 and 1. "
    "Do not include any words, symbols, or extra characters—only the number. Use the "
    "'Title' column from the dataset as input for sentiment analysis. Apply the given "
    "architecture (based on the meta-llama/llama-3.3-70b-instruct model via OpenRouter). "
    "Process the dataset using up to 50 parallel threads for efficiency. Save the sentiment "
    "scores in a CSV file alongside their corresponding titles.";

std::vector<LlmSpec> build_default_specs() {
  return {
      {"Deepseek V3", "deepseek_v3", "direct", "deepseek-chat",
       "https://api.deepseek.com", "DEEPSEEK_API_KEY"},
      {"Qwen Turbo", "qwen_turbo", "direct", "qwen-turbo",
       "https://dashscope-intl.aliyuncs.com/compatible-mode/v1", "DASHSCOPE_API_KEY"},
      {"GPT 3.5 Turbo", "gpt_3_5_turbo", "gateway", "openai/gpt-3.5-turbo", kOpenRouter,
       "OPENROUTER_API_KEY"},
      {"LLaMA 3.3 70B", "llama_3_3_70b", "gateway", "meta-llama/llama-3.3-70b-instruct",
       kOpenRouter, "OPENROUTER_API_KEY"},
      {"Claude 3.5 Haiku", "claude_3_5_haiku", "gateway", "anthropic/claude-3.5-haiku",
       kOpenRouter, "OPENROUTER_API_KEY"},
      {"GPT-4.1 Mini", "gpt_4_1_mini", "gateway", "openai/gpt-4.1-mini", kOpenRouter,
       "OPENROUTER_API_KEY"},
      {"GPT-4o Mini", "gpt_4o_mini", "gateway", "openai/gpt-4o-mini", kOpenRouter,
       "OPENROUTER_API_KEY"},
      {"Gemini 2.0 Flash", "gemini_2_0_flash", "gateway", "google/gemini-2.0-flash-001",
       kOpenRouter, "OPENROUTER_API_KEY"},
      {"LLaMA 4 Maverick", "llama_4_maverick", "gateway", "meta-llama/llama-4-maverick",
       kOpenRouter, "OPENROUTER_API_KEY"},
      {"Mistral ministral 8B", "mistral_ministral_8b", "gateway", "mistralai/ministral-8b",
       kOpenRouter, "OPENROUTER_API_KEY"},
  };
}

}  // namespace

const std::vector<LlmSpec>& default_llm_specs() {
  static const std::vector<LlmSpec> specs = build_default_specs();
  return specs;
}

const LlmSpec& llm_spec_by_name(const std::string& name_or_slug) {
  for (const LlmSpec& s : default_llm_specs())
    if (s.name == name_or_slug || s.slug == name_or_slug) return s;
  throw InputError("unknown LLM: '" + name_or_slug + "'");
}

std::vector<LlmSpec> apply_provider_overrides(std::vector<LlmSpec> specs, const Config& cfg) {
  for (LlmSpec& s : specs) {
    if (s.base_url == kOpenRouter)
      s.base_url = cfg.get_str("sentiment.openrouter_base_url", s.base_url);
    else if (s.slug == "deepseek_v3")
      s.base_url = cfg.get_str("sentiment.deepseek_base_url", s.base_url);
    else if (s.slug == "qwen_turbo")
      s.base_url = cfg.get_str("sentiment.dashscope_base_url", s.base_url);
    std::string env_key = "sentiment." + s.slug + ".api_key_env";
    if (cfg.has(env_key)) s.api_key_env = cfg.get_str(env_key, s.api_key_env);
  }
  return specs;
}

const char* to_string(Label label) {
  switch (label) {
    case Label::negative: return "negative";
    case Label::neutral: return "neutral";
    case Label::positive: return "positive";
  }
  return "?";
}

std::string build_prompt(const std::string& title) {
  if (title.empty()) throw InputError("cannot build a prompt for an empty title");
  return std::string(kPromptInstruction) + "\n\nTitle: " + title;
}

double parse_score(const std::string& response_text) {
  std::string t = trim(response_text);
  double v;
  try {
    v = parse_double(t);
  } catch (const ParseError&) {
    throw ParseError("completion is not a bare number: '" + t + "'");
  }
  if (!(v >= 0.0 && v <= 1.0))
    throw DataError("sentiment score out of [0,1]: " + t);
  return v;
}

Label classify(double score) {
  if (!(score >= 0.0 && score <= 1.0))
    throw InputError("classify: score out of [0,1]");
  if (score < 0.26) return Label::negative;
  if (score <= 0.75) return Label::neutral;
  return Label::positive;
}

std::string mock_completion(const std::string& model_name, const std::string& title) {
  std::uint64_t h = fnv1a64(model_name + '\x1f' + title);
  unsigned step = static_cast<unsigned>(h % 21);  // 0..20 -> 0.00..1.00
  char buf[8];
  std::snprintf(buf, sizeof buf, "%u.%02u", step * 5 / 100, step * 5 % 100);
  return buf;
}

CompletionFn make_mock_provider() {
  return [](const LlmSpec& spec, const std::string& prompt) {
    // The mock keys on the title line so it matches what a real provider sees.
    size_t pos = prompt.rfind("\n\nTitle: ");
    std::string title = pos == std::string::npos ? prompt : prompt.substr(pos + 9);
    return mock_completion(spec.model_id, title);
  };
}

CompletionFn make_http_provider(const Config& cfg) {
  HttpOptions opt;
  opt.attempts = 1;  // retries belong to score_articles
  opt.timeout_s = static_cast<int>(cfg.get_int("http.timeout_s", 30));
  return [opt](const LlmSpec& spec, const std::string& prompt) {
    const char* token = std::getenv(spec.api_key_env.c_str());
    if (!token || !*token)
      throw ConfigError("environment variable " + spec.api_key_env + " is not set (needed for " +
                        spec.name + ")");
    HttpJson client(spec.base_url, opt);
    nlohmann::json body{
        {"model", spec.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    nlohmann::json res =
        client.post("/chat/completions", body, {{"Authorization", std::string("Bearer ") + token}});
    try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw TransportError(spec.name + ": completion response missing choices[0].message.content");
    }
  };
}

std::vector<ScoreResult> score_articles(const std::vector<NewsArticle>& articles,
                                        const LlmSpec& spec, const CompletionFn& provider,
                                        int max_in_flight, RetryPolicy retry) {
  if (max_in_flight < 1) throw InputError("max_in_flight must be >= 1");
  std::vector<ScoreResult> results(articles.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= articles.size()) return;
      std::string prompt = build_prompt(articles[i].title);
      std::string last_error;
      for (int attempt = 1; attempt <= retry.attempts; ++attempt) {
        if (attempt > 1)
          std::this_thread::sleep_for(
              std::chrono::milliseconds(retry.backoff_ms << (attempt - 2)));
        try {
          results[i].score = parse_score(provider(spec, prompt));
          results[i].error.clear();
          break;
        } catch (const ConfigError&) {
          throw;  // credentials won't fix themselves mid-run
        } catch (const Error& e) {
          last_error = e.what();
        }
      }
      if (!results[i].score) results[i].error = last_error;
    }
  };

  size_t n_threads = std::min<size_t>(static_cast<size_t>(max_in_flight), articles.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

void write_sentiment_csv(const std::string& path, const SentimentTable& table) {
  std::vector<std::string> header{"article_id", "title"};
  header.insert(header.end(), table.llm_slugs.begin(), table.llm_slugs.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(table.article_ids.size());
  for (size_t i = 0; i < table.article_ids.size(); ++i) {
    std::vector<std::string> row{table.article_ids[i], table.titles[i]};
    for (size_t j = 0; j < table.llm_slugs.size(); ++j) {
      const auto& s = table.scores[i][j];
      row.push_back(s ? fmt_roundtrip(*s) : std::string());
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

SentimentTable load_sentiment_csv(const std::string& path) {
  CsvTable t = load_csv(path);
  if (t.header.size() < 3 || t.header[0] != "article_id" || t.header[1] != "title")
    throw ParseError(path + ": expected header article_id,title,<llm columns>");
  SentimentTable out;
  out.llm_slugs.assign(t.header.begin() + 2, t.header.end());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out.article_ids.push_back(r[0]);
    out.titles.push_back(r[1]);
    std::vector<std::optional<double>> scores;
    for (size_t j = 2; j < r.size(); ++j) {
      if (trim(r[j]).empty()) {
        scores.push_back(std::nullopt);
        continue;
      }
      double v = parse_double(r[j]);
      if (!(v >= 0.0 && v <= 1.0))
        throw DataError(path + " row " + std::to_string(i + 2) + ": score out of [0,1]");
      scores.push_back(v);
    }
    out.scores.push_back(std::move(scores));
  }
  return out;
}

}  // namespace sentcast
