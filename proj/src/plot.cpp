#include "sentcast/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

namespace {

constexpr double kW = 1200, kH = 420, kL = 70, kR = 24, kT = 44, kB = 52;

std::string f2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_plot_svg(const PredictionSeries& series, const std::string& title) {
  const auto& es = series.entries;
  if (es.empty()) throw InputError("render_plot_svg: empty prediction series");

  double lo = es[0].actual, hi = es[0].actual;
  for (const PredictionEntry& e : es) {
    lo = std::min({lo, e.actual, e.predicted});
    hi = std::max({hi, e.actual, e.predicted});
  }
  double pad = (hi - lo) * 0.04;
  if (pad <= 0.0) pad = 1.0;
  lo -= pad;
  hi += pad;

  size_t n = es.size();
  auto px = [&](size_t i) {
    return n == 1 ? (kL + (kW - kL - kR) / 2)
                  : kL + static_cast<double>(i) * (kW - kL - kR) / static_cast<double>(n - 1);
  };
  auto py = [&](double v) { return kT + (hi - v) / (hi - lo) * (kH - kT - kB); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(kW) + "\" height=\"" +
         f2(kH) + "\" viewBox=\"0 0 " + f2(kW) + " " + f2(kH) + "\">\n";
  svg += "<rect width=\"" + f2(kW) + "\" height=\"" + f2(kH) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + f2(kL) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";

  // y ticks
  for (int k = 0; k <= 4; ++k) {
    double v = lo + (hi - lo) * k / 4.0;
    double y = py(v);
    svg += "<line x1=\"" + f2(kL) + "\" y1=\"" + f2(y) + "\" x2=\"" + f2(kW - kR) + "\" y2=\"" +
           f2(y) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + f2(kL - 6) + "\" y=\"" + f2(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + f2(v) +
           "</text>\n";
  }

  // day boundaries + date labels
  CivilDate prev = civil_of_ny_minute(es[0].target_ts);
  svg += "<text x=\"" + f2(px(0)) + "\" y=\"" + f2(kH - kB + 16) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_civil(prev) + "</text>\n";
  for (size_t i = 1; i < n; ++i) {
    CivilDate cd = civil_of_ny_minute(es[i].target_ts);
    if (cd.y != prev.y || cd.m != prev.m || cd.d != prev.d) {
      double x = px(i);
      svg += "<line x1=\"" + f2(x) + "\" y1=\"" + f2(kT) + "\" x2=\"" + f2(x) + "\" y2=\"" +
             f2(kH - kB) + "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
      svg += "<text x=\"" + f2(x + 3) + "\" y=\"" + f2(kH - kB + 16) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_civil(cd) + "</text>\n";
      prev = cd;
    }
  }

  auto polyline = [&](const char* color, bool predicted) {
    std::string pts;
    for (size_t i = 0; i < n; ++i) {
      if (i) pts += " ";
      pts += f2(px(i)) + "," + f2(py(predicted ? es[i].predicted : es[i].actual));
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  };
  svg += polyline("#444444", false);
  svg += polyline("#d62728", true);

  // legend
  double lx = kW - kR - 170, ly = kT + 8;
  svg += "<line x1=\"" + f2(lx) + "\" y1=\"" + f2(ly) + "\" x2=\"" + f2(lx + 24) + "\" y2=\"" +
         f2(ly) + "\" stroke=\"#444444\" stroke-width=\"1.2\"/>\n";
  svg += "<text x=\"" + f2(lx + 30) + "\" y=\"" + f2(ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\">actual</text>\n";
  svg += "<line x1=\"" + f2(lx) + "\" y1=\"" + f2(ly + 18) + "\" x2=\"" + f2(lx + 24) +
         "\" y2=\"" + f2(ly + 18) + "\" stroke=\"#d62728\" stroke-width=\"1.2\"/>\n";
  svg += "<text x=\"" + f2(lx + 30) + "\" y=\"" + f2(ly + 22) +
         "\" font-family=\"sans-serif\" font-size=\"12\">predicted</text>\n";

  svg += "</svg>\n";
  return svg;
}

void write_plot_svg(const std::string& path, const PredictionSeries& series,
                    const std::string& title) {
  write_file(path, render_plot_svg(series, title));
}

}  // namespace sentcast
