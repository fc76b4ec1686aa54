#pragma once

#include <string>
#include <vector>

namespace sentcast {

struct ReportRow {
  std::string llm;
  double reformer_mse = 0.0;
  double mamba_mse = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;
  int best_reformer = -1;  // row index of the column minimum
  int best_mamba = -1;
};

// Flags each column's minimum (first row wins ties); empty input allowed.
Report make_report(std::vector<ReportRow> rows);

std::string render_report_csv(const Report& r);
Report parse_report_csv(const std::string& text);
std::string render_report_md(const Report& r);

}  // namespace sentcast
