#include "sentcast/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "sentcast/rng.hpp"

namespace sentcast {

namespace {

constexpr double kPi = 3.14159265358979323846;

const char* kSubjects[] = {"Apple", "The market", "A chipmaker", "Retail demand",
                           "The Nasdaq", "A supplier", "Consumer spending", "The sector"};
const char* kVerbs[] = {"rallies", "slips", "holds steady", "surges",
                        "drifts lower", "rebounds", "stalls", "extends gains"};
const char* kTails[] = {"after earnings", "on fresh guidance", "amid rate talk",
                        "as volumes thin", "despite headwinds", "on upgrade chatter",
                        "before the open", "into the close"};

}  // namespace

SyntheticFixture make_synthetic_fixture(std::uint64_t seed, const TradingCalendar& cal,
                                        CivilDate start, CivilDate end, int n_articles) {
  SyntheticFixture fx;
  std::vector<NyMinute> grid = trading_grid(cal, start, end);
  std::vector<CivilDate> days = trading_days(cal, start, end);

  Rng price_rng(derive_seed(seed, "prices"));
  double ar = 0.0;
  double prev_close = 0.0;
  // Two brief train-period spikes pin the min-max range while the baseline
  // stays in a narrow band: scaled targets then sit in a tight cluster a
  // known, small distance above the bottom of the range, so five short
  // training epochs show a clear loss decline for either model.
  size_t dip_day = days.size() / 5;
  size_t peak_day = 2 * days.size() / 5;
  for (size_t g = 0; g < grid.size(); ++g) {
    int mod = minute_of_day_of(grid[g]) - cal.open_minute;
    size_t day = g / static_cast<size_t>(cal.minutes_per_day());
    ar = 0.9 * ar + 0.01 * price_rng.normal();
    double close = 199.0 + 0.15 * std::sin(2.0 * kPi * mod / 390.0) +
                   0.1 * std::sin(2.0 * kPi * static_cast<double>(g) / 1333.0) + ar;
    if (day == dip_day && mod >= 180 && mod < 182) close -= 0.8;
    if (day == peak_day && mod >= 200 && mod < 202) close += 9.2;
    double open = g == 0 ? close : prev_close;
    double wick = 0.02 + 0.03 * price_rng.uniform();
    MinuteBar bar;
    bar.ts = grid[g];
    bar.open = open;
    bar.close = close;
    bar.high = std::max(open, close) + wick;
    bar.low = std::min(open, close) - wick;
    bar.volume = 500 + static_cast<std::int64_t>(price_rng.uniform_int(4500));
    fx.bars.push_back(bar);
    prev_close = close;
  }

  // Headlines from the prior Friday evening through the last close, so some
  // arrive pre-open, over weekends, and mid-session.  The whole window is in
  // daylight time, so inverting the NY offset pointwise is exact here.
  Rng news_rng(derive_seed(seed, "news"));
  auto ny_minute_to_utc = [](NyMinute t) {
    NySec s = t * 60;
    return s - ny_utc_offset_seconds(s);
  };
  std::int64_t span_start = ny_minute_to_utc(grid.front()) - 64 * 3600;  // prior Friday evening
  std::int64_t span = ny_minute_to_utc(grid.back()) - span_start;
  for (int i = 0; i < n_articles; ++i) {
    NewsArticle a;
    a.id = "SYN-" + std::to_string(1000 + i);
    a.title = std::string(kSubjects[news_rng.uniform_int(8)]) + " " +
              kVerbs[news_rng.uniform_int(8)] + " " + kTails[news_rng.uniform_int(8)] + " (" +
              std::to_string(i) + ")";
    a.description = "synthetic fixture article";
    a.source = "fixture";
    a.url = "https://example.invalid/articles/" + std::to_string(1000 + i);
    a.published_utc = span_start + static_cast<std::int64_t>(news_rng.uniform_int(
                                       static_cast<std::uint64_t>(span)));
    fx.articles.push_back(a);
  }
  std::stable_sort(fx.articles.begin(), fx.articles.end(),
                   [](const NewsArticle& x, const NewsArticle& y) {
                     return x.published_utc < y.published_utc;
                   });
  return fx;
}

}  // namespace sentcast
