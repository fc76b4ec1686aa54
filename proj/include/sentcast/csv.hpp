#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sentcast {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by header name; throws ParseError when absent.
  size_t col(std::string_view name) const;
};

// RFC-4180-style parsing: quoted fields, doubled-quote escapes, embedded
// newlines, CRLF tolerated.  Every row must match the header width.
CsvTable parse_csv(std::string_view text);
CsvTable load_csv(const std::string& path);

std::string render_csv_row(const std::vector<std::string>& fields);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Numeric field helpers.
double parse_double(std::string_view field);     // ParseError on junk
long long parse_int(std::string_view field);     // ParseError on junk
std::string fmt_g12(double v);                   // 12 significant digits
std::string fmt_roundtrip(double v);             // shortest exact decimal

}  // namespace sentcast
