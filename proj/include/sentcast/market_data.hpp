#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentcast/calendar.hpp"
#include "sentcast/config.hpp"

namespace sentcast {

struct NewsArticle {
  std::string id;
  std::string title;
  std::string description;
  std::string source;
  std::string url;
  std::int64_t published_utc = 0;  // epoch seconds
};

struct MinuteBar {
  NyMinute ts = 0;
  double open = 0, high = 0, low = 0, close = 0;
  std::int64_t volume = 0;
};

// OHLCV sanity; throws DataError naming the offending timestamp.
void validate_bar(const MinuteBar& bar, const TradingCalendar& cal);

// CSV fixtures (columns documented in the README).
std::vector<NewsArticle> load_articles(const std::string& path);
std::vector<MinuteBar> load_bars(const std::string& path, const TradingCalendar& cal);
void write_articles_csv(const std::string& path, const std::vector<NewsArticle>& articles);
void write_bars_csv(const std::string& path, const std::vector<MinuteBar>& bars);

// Sort by ts; identical duplicates collapse (first kept), conflicting
// duplicates are a hard error.
std::vector<MinuteBar> normalize_bars(std::vector<MinuteBar> bars);

std::vector<NewsArticle> filter_window(const std::vector<NewsArticle>& articles,
                                       std::int64_t from_utc, std::int64_t to_utc);

// Paged HTTP ingestion: GET {base_url}/articles?page=N&page_size=K (resp.
// /bars?...), bearer token from the environment variable named in config,
// JSON body {"results":[...]}; an empty page terminates pagination.
std::vector<NewsArticle> fetch_articles(const Config& cfg);
std::vector<MinuteBar> fetch_bars(const Config& cfg, const TradingCalendar& cal);

}  // namespace sentcast
