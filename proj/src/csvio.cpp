#include "spinloop/csvio.hpp"

#include <cinttypes>
#include <cstdio>

#include "spinloop/version.hpp"

namespace spinloop {

std::string format_double(double v) {
  char buf[40];
  // %.17g is always sufficient to round-trip a double; prefer the shortest
  // representation that still does.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lg", &back);
    if (back == v) return buf;
  }
  return buf;
}

void CsvWriter::comment(const std::string& line) { os_ << "# " << line << "\n"; }

void CsvWriter::standard_header(std::uint64_t config_hash) {
  os_ << "# " << kToolName << " " << kVersion << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, config_hash);
  os_ << "# config_hash = " << buf << "\n";
}

void CsvWriter::columns(const std::vector<Column>& cols) {
  os_ << "# columns:";
  for (const auto& c : cols) os_ << " " << c.name << " [" << c.unit << "]";
  os_ << "\n";
  for (size_t i = 0; i < cols.size(); ++i) os_ << (i ? "," : "") << cols[i].name;
  os_ << "\n";
}

void CsvWriter::row(std::span<const double> values) {
  for (size_t i = 0; i < values.size(); ++i)
    os_ << (i ? "," : "") << format_double(values[i]);
  os_ << "\n";
}

void CsvWriter::row_cells(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
  os_ << "\n";
}

}  // namespace spinloop
