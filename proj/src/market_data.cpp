#include "sentcast/market_data.hpp"

#include <algorithm>
#include <cstdio>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"
#include "sentcast/http.hpp"

namespace sentcast {

void validate_bar(const MinuteBar& b, const TradingCalendar& cal) {
  std::string at = " at " + fmt_grid_ts(b.ts);
  if (b.volume < 0) throw DataError("negative volume" + at);
  if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0))
    throw DataError("non-positive price" + at);
  double body_lo = std::min(b.open, b.close);
  double body_hi = std::max(b.open, b.close);
  if (!(b.low <= body_lo && body_hi <= b.high))
    throw DataError("OHLC ordering violated" + at);
  CivilDate day = civil_of_ny_minute(b.ts);
  int mod = minute_of_day_of(b.ts);
  if (!cal.is_trading_day(day) || mod < cal.open_minute || mod >= cal.close_minute)
    throw DataError("bar timestamp off the trading grid" + at);
}

std::vector<NewsArticle> load_articles(const std::string& path) {
  CsvTable t = load_csv(path);
  size_t c_id = t.col("id"), c_title = t.col("title"), c_desc = t.col("description");
  size_t c_src = t.col("source"), c_url = t.col("url"), c_pub = t.col("published_utc");
  std::vector<NewsArticle> out;
  out.reserve(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    NewsArticle a;
    a.id = r[c_id];
    a.title = r[c_title];
    a.description = r[c_desc];
    a.source = r[c_src];
    a.url = r[c_url];
    try {
      a.published_utc = parse_rfc3339(r[c_pub]);
    } catch (const ParseError& e) {
      throw ParseError(path + " row " + std::to_string(i + 2) + ": " + e.what());
    }
    if (a.title.empty())
      throw DataError(path + " row " + std::to_string(i + 2) + ": empty title");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<MinuteBar> normalize_bars(std::vector<MinuteBar> bars) {
  std::stable_sort(bars.begin(), bars.end(),
                   [](const MinuteBar& a, const MinuteBar& b) { return a.ts < b.ts; });
  std::vector<MinuteBar> out;
  out.reserve(bars.size());
  for (const MinuteBar& b : bars) {
    if (!out.empty() && out.back().ts == b.ts) {
      const MinuteBar& f = out.back();
      bool same = f.open == b.open && f.high == b.high && f.low == b.low &&
                  f.close == b.close && f.volume == b.volume;
      if (!same)
        throw DataError("conflicting duplicate bars at " + fmt_grid_ts(b.ts));
      std::fprintf(stderr, "warning: duplicate bar at %s dropped\n", fmt_grid_ts(b.ts).c_str());
      continue;
    }
    out.push_back(b);
  }
  return out;
}

std::vector<MinuteBar> load_bars(const std::string& path, const TradingCalendar& cal) {
  CsvTable t = load_csv(path);
  size_t c_ts = t.col("ts"), c_o = t.col("open"), c_h = t.col("high"), c_l = t.col("low"),
         c_c = t.col("close"), c_v = t.col("volume");
  std::vector<MinuteBar> bars;
  bars.reserve(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    MinuteBar b;
    try {
      b.ts = parse_grid_ts(r[c_ts]);
      b.open = parse_double(r[c_o]);
      b.high = parse_double(r[c_h]);
      b.low = parse_double(r[c_l]);
      b.close = parse_double(r[c_c]);
      b.volume = parse_int(r[c_v]);
    } catch (const ParseError& e) {
      throw ParseError(path + " row " + std::to_string(i + 2) + ": " + e.what());
    }
    try {
      validate_bar(b, cal);
    } catch (const DataError& e) {
      throw DataError(path + " row " + std::to_string(i + 2) + ": " + e.what());
    }
    bars.push_back(b);
  }
  return normalize_bars(std::move(bars));
}

void write_articles_csv(const std::string& path, const std::vector<NewsArticle>& articles) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(articles.size());
  for (const auto& a : articles) {
    std::int64_t t = a.published_utc;
    std::int64_t day = t >= 0 ? t / 86400 : (t - 86399) / 86400;
    CivilDate cd = civil_from_days(day);
    std::int64_t s = t - day * 86400;
    char ts[32];
    std::snprintf(ts, sizeof ts, "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.y, cd.m, cd.d,
                  static_cast<int>(s / 3600), static_cast<int>(s / 60 % 60),
                  static_cast<int>(s % 60));
    rows.push_back({a.id, a.title, a.description, a.source, a.url, ts});
  }
  write_csv(path, {"id", "title", "description", "source", "url", "published_utc"}, rows);
}

void write_bars_csv(const std::string& path, const std::vector<MinuteBar>& bars) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(bars.size());
  for (const auto& b : bars)
    rows.push_back({fmt_grid_ts(b.ts), fmt_g12(b.open), fmt_g12(b.high), fmt_g12(b.low),
                    fmt_g12(b.close), std::to_string(b.volume)});
  write_csv(path, {"ts", "open", "high", "low", "close", "volume"}, rows);
}

std::vector<NewsArticle> filter_window(const std::vector<NewsArticle>& articles,
                                       std::int64_t from_utc, std::int64_t to_utc) {
  std::vector<NewsArticle> out;
  for (const auto& a : articles)
    if (a.published_utc >= from_utc && a.published_utc <= to_utc) out.push_back(a);
  return out;
}

namespace {

HttpOptions http_options(const Config& cfg) {
  HttpOptions opt;
  opt.attempts = static_cast<int>(cfg.get_int("http.attempts", 3));
  opt.backoff_ms = static_cast<int>(cfg.get_int("http.backoff_ms", 500));
  opt.timeout_s = static_cast<int>(cfg.get_int("http.timeout_s", 30));
  return opt;
}

// Shared paged-GET driver; `consume` ingests one page's "results" array and
// returns the number of records it contained.
template <typename Consume>
void fetch_paged(const Config& cfg, const std::string& base_key, const std::string& resource,
                 Consume&& consume) {
  HttpJson client(cfg.require_str(base_key + ".base_url"), http_options(cfg));
  std::string token = cfg.env_secret(base_key + ".api_key_env");
  HttpJson::Headers headers{{"Authorization", "Bearer " + token}};
  long long page_size = cfg.get_int(base_key + ".page_size", 100);

  for (long long page = 1; page <= 100000; ++page) {
    nlohmann::json body = client.get(
        "/" + resource + "?page=" + std::to_string(page) +
        "&page_size=" + std::to_string(page_size), headers);
    if (!body.contains("results") || !body["results"].is_array())
      throw TransportError(resource + " response missing 'results' array");
    if (body["results"].empty()) return;
    consume(body["results"]);
    if (static_cast<long long>(body["results"].size()) < page_size) return;
  }
  throw TransportError(resource + " pagination did not terminate");
}

std::string json_str(const nlohmann::json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw TransportError(std::string("record missing field '") + key + "'");
    return {};
  }
  return j[key].get<std::string>();
}

}  // namespace

std::vector<NewsArticle> fetch_articles(const Config& cfg) {
  std::vector<NewsArticle> out;
  fetch_paged(cfg, "news", "articles", [&](const nlohmann::json& results) {
    for (const auto& j : results) {
      NewsArticle a;
      a.id = json_str(j, "id", true);
      a.title = json_str(j, "title", true);
      a.description = json_str(j, "description", false);
      a.source = json_str(j, "source", false);
      a.url = json_str(j, "url", false);
      a.published_utc = parse_rfc3339(json_str(j, "published_utc", true));
      if (a.title.empty()) throw DataError("fetched article " + a.id + " has empty title");
      out.push_back(std::move(a));
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const NewsArticle& a, const NewsArticle& b) {
    return a.published_utc < b.published_utc;
  });
  return out;
}

std::vector<MinuteBar> fetch_bars(const Config& cfg, const TradingCalendar& cal) {
  std::vector<MinuteBar> bars;
  fetch_paged(cfg, "bars", "bars", [&](const nlohmann::json& results) {
    for (const auto& j : results) {
      MinuteBar b;
      b.ts = parse_grid_ts(json_str(j, "ts", true));
      b.open = j.at("open").get<double>();
      b.high = j.at("high").get<double>();
      b.low = j.at("low").get<double>();
      b.close = j.at("close").get<double>();
      b.volume = j.at("volume").get<std::int64_t>();
      validate_bar(b, cal);
      bars.push_back(b);
    }
  });
  return normalize_bars(std::move(bars));
}

}  // namespace sentcast
