#ifndef LCS_DATASET_HPP_
#define LCS_DATASET_HPP_

#include <string>
#include <vector>

#include "lcs/systems.hpp"

namespace lcs::learn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Labelled triples (x, u, ẋ); one sample per column.
struct LabelledDataset {
  Mat x;     // n × N
  Mat u;     // m × N
  Mat xdot;  // n × N

  int size() const { return static_cast<int>(x.cols()); }
  void validate() const;

  void save_csv(const std::string& path) const;
  static LabelledDataset load_csv(const std::string& path, int n, int m);
};

/// Unlabelled pairs (x, x̄) for SDC factorization training.
struct SdcAuxDataset {
  Mat x;     // n × N
  Mat xbar;  // n × N

  int size() const { return static_cast<int>(x.cols()); }
  void save_csv(const std::string& path) const;
  static SdcAuxDataset load_csv(const std::string& path, int n);
};

/// Unlabelled triples (x, x̄, ū) for CCM training.
struct CcmAuxDataset {
  Mat x;     // n × N
  Mat xbar;  // n × N
  Mat ubar;  // m × N

  int size() const { return static_cast<int>(x.cols()); }
  void save_csv(const std::string& path) const;
  static CcmAuxDataset load_csv(const std::string& path, int n, int m);
};

/// Uniform draws from X×U labelled by the true dynamics.
LabelledDataset generate_uniform(const sys::SystemSpec& system, int count,
                                 Rng& rng);

SdcAuxDataset generate_sdc_aux(const sys::SystemSpec& system, int count,
                               Rng& rng);

CcmAuxDataset generate_ccm_aux(const sys::SystemSpec& system, int count,
                               Rng& rng);

}  // namespace lcs::learn

#endif  // LCS_DATASET_HPP_
