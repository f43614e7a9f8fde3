#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace spinloop {

// Shortest round-trippable decimal representation of a double.
std::string format_double(double v);

struct Column {
  std::string name;
  std::string unit;  // "1" for dimensionless
};

// Comma-separated output with a '#'-prefixed header block carrying tool
// version, config hash and column units. Output is plain bytes with '.'
// decimals and scientific notation where needed, so files compare equal
// across runs and worker counts.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void comment(const std::string& line);
  void standard_header(std::uint64_t config_hash);
  void columns(const std::vector<Column>& cols);
  void row(std::span<const double> values);
  void row_cells(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

}  // namespace spinloop
