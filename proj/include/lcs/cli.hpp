#ifndef LCS_CLI_HPP_
#define LCS_CLI_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace lcs::bench {

/// Pipeline configuration; every CLI subcommand accepts this as a JSON file
/// with individual flags taking precedence.
struct RunConfig {
  std::string system = "spacecraft";
  std::string method = "sdc-sdlqr";
  int n_labelled = 1000;
  int n_traj = 0;  // when > 0, data generation is on-policy
  int n_aux = 10000;
  int epochs = 5000;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int n_test = 20;
  std::string out_dir = "results";
  std::vector<int> hidden = {128, 128};
  double learning_rate = 1e-3;
  double perturb_frac = 1.0;  // 1.0 = initial states uniform over the state box

  void validate() const;
  static RunConfig from_json_file(const std::string& path);

  /// Paper-scale settings: N_test = 100, 5 seeds, 50000 epochs.
  void apply_paper_scale();
};

/// Entry point behind tools/main.cpp; returns the process exit code
/// (0 success, 1 usage/config error, 2 runtime failure).
int run_cli(int argc, const char* const* argv);

}  // namespace lcs::bench

#endif  // LCS_CLI_HPP_
