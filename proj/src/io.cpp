#include "avgbound/io.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace avgbound {
namespace io {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string fmt_time(double seconds) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", seconds);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), cols_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  if (cols_ == 0) throw std::runtime_error("empty CSV header: " + path);
  for (std::size_t i = 0; i < cols_; ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_)
    throw std::runtime_error(path_ + ": row width " + std::to_string(cells.size()) +
                             " does not match header width " + std::to_string(cols_));
  for (std::size_t i = 0; i < cols_; ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw std::runtime_error("write failure: " + path_);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(fmt(v));
  row(cells);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("empty CSV file: " + path);
  return table;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw std::runtime_error("write failure: " + path);
}

}  // namespace io
}  // namespace avgbound
