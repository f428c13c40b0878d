#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace cab {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Comma-separated rows with a fixed column count. Fields are written
/// verbatim; callers pass identifiers that contain no separators.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(std::int64_t value);
  CsvWriter& field(int value) { return field(static_cast<std::int64_t>(value)); }
  CsvWriter& field(std::uint64_t value);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace cab
