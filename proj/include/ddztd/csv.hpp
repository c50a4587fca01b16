#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ddztd/errors.hpp"

namespace ddztd {

// Formats a double with 17 significant digits so that repeated runs are
// byte-comparable and the value round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal CSV writer: documented header row, one record per line, floats at
// 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw Error("cannot open CSV file for writing: " + path);
    write_row_(header);
    columns_ = header.size();
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
      throw Error("CSV row width does not match header");
    write_row_(cells);
  }

  // Convenience for all-numeric rows.
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
  }

 private:
  void write_row_(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_ = 0;
};

}  // namespace ddztd
