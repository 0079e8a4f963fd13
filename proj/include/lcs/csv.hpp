#ifndef LCS_CSV_HPP_
#define LCS_CSV_HPP_

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace lcs::csv {

/// A CSV table with a header row and double-valued cells, written with
/// 17-significant-digit formatting so round trips are exact.
struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;  // one table row per matrix row

  void save(const std::string& path) const;
  static Table load(const std::string& path);
};

std::string format_double(double v);

/// Expands names like "x1..x6" used when building headers.
std::vector<std::string> numbered(const std::string& prefix, int count);

}  // namespace lcs::csv

#endif  // LCS_CSV_HPP_
