#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shorttime/errors.hpp"

namespace shorttime {

// 17 significant digits: enough to round-trip any double.
[[nodiscard]] inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Comma-separated table with a header row. Cells are written verbatim, so
// callers format numbers with fmt17.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error("table row has the wrong number of cells");
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t rows() const { return rows_.size(); }

  [[nodiscard]] std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace shorttime
