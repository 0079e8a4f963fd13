#ifndef LCS_REPORT_HPP_
#define LCS_REPORT_HPP_

#include <string>
#include <vector>

#include "lcs/eval.hpp"

namespace lcs::bench {

/// All record files (rec_*.json) under a directory, sorted by filename.
std::vector<EvalRecord> load_records(const std::string& dir);

/// Aggregate results table: method,system,N,seed,traj_id,rms,diverged,solver_failures.
void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& records);

/// Per-(method, N) medians and IQRs across seeds.
void write_summary_csv(const std::string& path, const RmsSummary& summary,
                       const std::string& system);

/// Median normalized tracking error vs time with IQR bands, one line per
/// method, for records sharing a system and N. Log-scale error axis.
void write_error_profile_svg(const std::string& path,
                             const std::vector<EvalRecord>& records,
                             const std::string& system, int labelled_size);

/// Median RMS vs N with IQR bands per method. Log-log axes.
void write_rms_vs_n_svg(const std::string& path, const RmsSummary& summary,
                        const std::string& system);

/// Emits results.csv, summary.csv, and the SVG plots for every (system, N)
/// present in the records.
void write_report(const std::string& out_dir,
                  const std::vector<EvalRecord>& records);

}  // namespace lcs::bench

#endif  // LCS_REPORT_HPP_
