#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace avgbound {
namespace io {

/// Scientific notation with 17 significant digits; round-trips any finite
/// double bit-exactly through strtod.
[[nodiscard]] std::string fmt(double x);

/// Seconds with 3 significant digits, for wall-clock reporting.
[[nodiscard]] std::string fmt_time(double seconds);

/// Comma-separated values, '.' decimal, mandatory header row.  Throws
/// std::runtime_error on open failure or a row whose width disagrees with
/// the header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t cols_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a CSV written by CsvWriter (no quoting or embedded commas).
[[nodiscard]] CsvTable read_csv(const std::string& path);

/// Writes pre-serialized JSON text (callers build it with their JSON
/// library of choice) with a trailing newline.
void write_text(const std::string& path, const std::string& text);

}  // namespace io
}  // namespace avgbound
