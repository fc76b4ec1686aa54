#include "sentcast/report.hpp"

#include <cstdio>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

Report make_report(std::vector<ReportRow> rows) {
  Report r;
  r.rows = std::move(rows);
  for (size_t i = 0; i < r.rows.size(); ++i) {
    if (r.best_reformer < 0 ||
        r.rows[i].reformer_mse < r.rows[static_cast<size_t>(r.best_reformer)].reformer_mse)
      r.best_reformer = static_cast<int>(i);
    if (r.best_mamba < 0 ||
        r.rows[i].mamba_mse < r.rows[static_cast<size_t>(r.best_mamba)].mamba_mse)
      r.best_mamba = static_cast<int>(i);
  }
  return r;
}

std::string render_report_csv(const Report& r) {
  std::string out =
      render_csv_row({"llm", "reformer_mse", "mamba_mse", "best_reformer", "best_mamba"}) + "\n";
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const ReportRow& row = r.rows[i];
    out += render_csv_row({row.llm, fmt_roundtrip(row.reformer_mse),
                           fmt_roundtrip(row.mamba_mse),
                           static_cast<int>(i) == r.best_reformer ? "1" : "0",
                           static_cast<int>(i) == r.best_mamba ? "1" : "0"}) +
           "\n";
  }
  return out;
}

Report parse_report_csv(const std::string& text) {
  CsvTable t = parse_csv(text);
  std::vector<std::string> want = {"llm", "reformer_mse", "mamba_mse", "best_reformer",
                                   "best_mamba"};
  if (t.header != want) throw ParseError("report: unexpected header");
  std::vector<ReportRow> rows;
  int best_r = -1, best_m = -1;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    rows.push_back({t.rows[i][0], parse_double(t.rows[i][1]), parse_double(t.rows[i][2])});
    if (t.rows[i][3] == "1") best_r = static_cast<int>(i);
    if (t.rows[i][4] == "1") best_m = static_cast<int>(i);
  }
  Report r = make_report(std::move(rows));
  if (r.best_reformer != best_r || r.best_mamba != best_m)
    throw DataError("report: best-column flags do not match recomputed minima");
  return r;
}

namespace {

std::string md_mse(double v, bool best) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return best ? "**" + std::string(buf) + "**" : std::string(buf);
}

}  // namespace

std::string render_report_md(const Report& r) {
  std::string out = "| LLM Source | Reformer MSE | Mamba MSE |\n|---|---|---|\n";
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const ReportRow& row = r.rows[i];
    out += "| " + row.llm + " | " + md_mse(row.reformer_mse, static_cast<int>(i) == r.best_reformer) +
           " | " + md_mse(row.mamba_mse, static_cast<int>(i) == r.best_mamba) + " |\n";
  }
  return out;
}

}  // namespace sentcast
