#pragma once

#include <string>

#include "sentcast/predict.hpp"

namespace sentcast {

// Two-line actual-vs-predicted chart with dashed day boundaries; byte output
// is a pure function of the series and title.
std::string render_plot_svg(const PredictionSeries& series, const std::string& title);
void write_plot_svg(const std::string& path, const PredictionSeries& series,
                    const std::string& title);

}  // namespace sentcast
