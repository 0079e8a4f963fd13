#include "lcs/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lcs::csv {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> numbered(const std::string& prefix, int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

void Table::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) out << ',';
      out << format_double(rows(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed: " + path);
}

Table Table::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open: " + path);
  Table table;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("csv: empty file: " + path);
  }
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::vector<std::vector<double>> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      row.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) {
        throw std::runtime_error("csv: non-numeric cell in " + path);
      }
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("csv: ragged row in " + path);
    }
    data.push_back(std::move(row));
  }
  table.rows.resize(static_cast<Eigen::Index>(data.size()),
                    static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < data[r].size(); ++c) {
      table.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          data[r][c];
    }
  }
  return table;
}

}  // namespace lcs::csv
