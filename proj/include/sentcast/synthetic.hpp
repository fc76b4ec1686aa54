#pragma once

#include <cstdint>
#include <vector>

#include "sentcast/calendar.hpp"
#include "sentcast/market_data.hpp"

namespace sentcast {

struct SyntheticFixture {
  std::vector<MinuteBar> bars;
  std::vector<NewsArticle> articles;
};

// Seeded sinusoid-plus-AR(1) prices on the trading grid and a stream of
// headlines spread over the same span (starting the prior Friday evening so
// weekend/pre-open alignment paths get exercised).
SyntheticFixture make_synthetic_fixture(std::uint64_t seed, const TradingCalendar& cal,
                                        CivilDate start, CivilDate end, int n_articles = 400);

}  // namespace sentcast
