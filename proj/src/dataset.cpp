#include "lcs/dataset.hpp"

#include <stdexcept>

#include "lcs/csv.hpp"

namespace lcs::learn {

namespace {

std::vector<std::string> cat(std::vector<std::string> a,
                             const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Mat columns_from_rows(const Eigen::MatrixXd& rows, int col0, int count) {
  return rows.middleCols(col0, count).transpose();
}

void check_header(const csv::Table& table, const std::vector<std::string>& want,
                  const std::string& path) {
  if (table.header != want) {
    throw std::runtime_error("csv: unexpected header in " + path);
  }
}

}  // namespace

void LabelledDataset::validate() const {
  if (x.cols() != u.cols() || x.cols() != xdot.cols() ||
      x.rows() != xdot.rows()) {
    throw std::invalid_argument("labelled dataset: inconsistent shapes");
  }
  if (!x.allFinite() || !u.allFinite() || !xdot.allFinite()) {
    throw std::invalid_argument("labelled dataset: non-finite entries");
  }
}

void LabelledDataset::save_csv(const std::string& path) const {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(u.rows());
  csv::Table table;
  table.header = cat(cat(csv::numbered("x", n), csv::numbered("u", m)),
                     csv::numbered("xdot", n));
  table.rows.resize(x.cols(), 2 * n + m);
  table.rows << x.transpose(), u.transpose(), xdot.transpose();
  table.save(path);
}

LabelledDataset LabelledDataset::load_csv(const std::string& path, int n,
                                          int m) {
  csv::Table table = csv::Table::load(path);
  check_header(table,
               cat(cat(csv::numbered("x", n), csv::numbered("u", m)),
                   csv::numbered("xdot", n)),
               path);
  LabelledDataset data;
  data.x = columns_from_rows(table.rows, 0, n);
  data.u = columns_from_rows(table.rows, n, m);
  data.xdot = columns_from_rows(table.rows, n + m, n);
  data.validate();
  return data;
}

void SdcAuxDataset::save_csv(const std::string& path) const {
  const int n = static_cast<int>(x.rows());
  csv::Table table;
  table.header = cat(csv::numbered("x", n), csv::numbered("xbar", n));
  table.rows.resize(x.cols(), 2 * n);
  table.rows << x.transpose(), xbar.transpose();
  table.save(path);
}

SdcAuxDataset SdcAuxDataset::load_csv(const std::string& path, int n) {
  csv::Table table = csv::Table::load(path);
  check_header(table, cat(csv::numbered("x", n), csv::numbered("xbar", n)),
               path);
  SdcAuxDataset data;
  data.x = columns_from_rows(table.rows, 0, n);
  data.xbar = columns_from_rows(table.rows, n, n);
  return data;
}

void CcmAuxDataset::save_csv(const std::string& path) const {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(ubar.rows());
  csv::Table table;
  table.header = cat(cat(csv::numbered("x", n), csv::numbered("xbar", n)),
                     csv::numbered("ubar", m));
  table.rows.resize(x.cols(), 2 * n + m);
  table.rows << x.transpose(), xbar.transpose(), ubar.transpose();
  table.save(path);
}

CcmAuxDataset CcmAuxDataset::load_csv(const std::string& path, int n, int m) {
  csv::Table table = csv::Table::load(path);
  check_header(table,
               cat(cat(csv::numbered("x", n), csv::numbered("xbar", n)),
                   csv::numbered("ubar", m)),
               path);
  CcmAuxDataset data;
  data.x = columns_from_rows(table.rows, 0, n);
  data.xbar = columns_from_rows(table.rows, n, n);
  data.ubar = columns_from_rows(table.rows, 2 * n, m);
  return data;
}

namespace {

Mat draw_matrix(const sys::Box& box, int count, Rng& rng) {
  Mat out(box.dim(), count);
  for (int i = 0; i < count; ++i) {
    for (int d = 0; d < box.dim(); ++d) {
      out(d, i) = rng.uniform(box.lower(d), box.upper(d));
    }
  }
  return out;
}

}  // namespace

LabelledDataset generate_uniform(const sys::SystemSpec& system, int count,
                                 Rng& rng) {
  LabelledDataset data;
  data.x = draw_matrix(system.state_box, count, rng);
  data.u = draw_matrix(system.control_box, count, rng);
  data.xdot.resize(system.n, count);
  for (int i = 0; i < count; ++i) {
    data.xdot.col(i) = sys::eval_dynamics(system, data.x.col(i), data.u.col(i));
  }
  return data;
}

SdcAuxDataset generate_sdc_aux(const sys::SystemSpec& system, int count,
                               Rng& rng) {
  SdcAuxDataset data;
  data.x = draw_matrix(system.state_box, count, rng);
  data.xbar = draw_matrix(system.state_box, count, rng);
  return data;
}

CcmAuxDataset generate_ccm_aux(const sys::SystemSpec& system, int count,
                               Rng& rng) {
  CcmAuxDataset data;
  data.x = draw_matrix(system.state_box, count, rng);
  data.xbar = draw_matrix(system.state_box, count, rng);
  data.ubar = draw_matrix(system.control_box, count, rng);
  return data;
}

}  // namespace lcs::learn
