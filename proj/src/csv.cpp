#include "sentcast/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sentcast/common.hpp"

namespace sentcast {

size_t CsvTable::col(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError("csv: missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable out;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  size_t line = 1;
  size_t row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (out.header.empty()) {
      out.header = std::move(row);
    } else {
      if (row.size() != out.header.size())
        throw ParseError("csv: line " + std::to_string(row_line) + ": expected " +
                         std::to_string(out.header.size()) + " fields, got " +
                         std::to_string(row.size()));
      out.rows.push_back(std::move(row));
    }
    row.clear();
    row_started = false;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (!row_started) {
      row_started = true;
      row_line = line;
    }
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallow; the following \n (if any) ends the row
      if (i + 1 >= text.size() || text[i + 1] != '\n') {
        ++line;
        end_row();
      }
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      field += c;
    }
  }
  if (in_quotes) throw ParseError("csv: unterminated quoted field at end of input");
  if (row_started) end_row();
  return out;
}

CsvTable load_csv(const std::string& path) {
  return parse_csv(read_file(path));
}

static bool needs_quotes(const std::string& f) {
  return f.find_first_of(",\"\n\r") != std::string::npos;
}

std::string render_csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    if (needs_quotes(fields[i])) {
      out += '"';
      for (char c : fields[i]) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    } else {
      out += fields[i];
    }
  }
  out += '\n';
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out = render_csv_row(header);
  for (const auto& r : rows) {
    if (r.size() != header.size())
      throw InputError("csv: row width " + std::to_string(r.size()) +
                       " does not match header width " + std::to_string(header.size()));
    out += render_csv_row(r);
  }
  write_file(path, out);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write file: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw InputError("write failed: " + path);
}

double parse_double(std::string_view field) {
  std::string s = trim(field);
  if (s.empty()) throw ParseError("empty numeric field");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError("not a number: '" + s + "'");
  return v;
}

long long parse_int(std::string_view field) {
  std::string s = trim(field);
  if (s.empty()) throw ParseError("empty integer field");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError("not an integer: '" + s + "'");
  return v;
}

std::string fmt_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt_roundtrip(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace sentcast
