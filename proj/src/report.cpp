#include "lcs/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lcs/csv.hpp"

namespace lcs::bench {

namespace {

namespace fs = std::filesystem;

std::string color_for(const std::string& method) {
  if (method == "oracle-lqr") return "#000000";
  if (method == "oracle-sdlqr") return "#7f7f7f";
  if (method == "naive-lqr") return "#1f77b4";
  if (method == "sdc-sdlqr") return "#d62728";
  if (method == "sdc-linlqr") return "#ff7f0e";
  if (method == "ccm") return "#2ca02c";
  return "#9467bd";
}

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 70;

struct Axes {
  double x_min, x_max, y_min, y_max;
  double sx(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  }
  double sy(double y) const {
    return kHeight - kBottom -
           (y - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void svg_open(std::ostringstream& svg) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void svg_frame(std::ostringstream& svg, const Axes& ax,
               const std::string& x_label, const std::string& y_label,
               const std::string& title) {
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
      << kHeight - 28 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label << "</text>\n";
  svg << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"18\" "
      << "text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  (void)ax;
}

void svg_x_tick(std::ostringstream& svg, const Axes& ax, double x,
                const std::string& label) {
  const double px = ax.sx(x);
  svg << "<line x1=\"" << px << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << px << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << px << "\" y=\"" << kHeight - kBottom + 20
      << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
}

void svg_y_tick(std::ostringstream& svg, const Axes& ax, double y,
                const std::string& label) {
  const double py = ax.sy(y);
  svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\"" << kLeft
      << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << py + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
}

void svg_polyline(std::ostringstream& svg, const Axes& ax,
                  const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color, double width) {
  svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
      << width << "\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << fmt(ax.sx(xs[i])) << "," << fmt(ax.sy(ys[i])) << " ";
  }
  svg << "\"/>\n";
}

void svg_band(std::ostringstream& svg, const Axes& ax,
              const std::vector<double>& xs, const std::vector<double>& lo,
              const std::vector<double>& hi, const std::string& color) {
  svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << fmt(ax.sx(xs[i])) << "," << fmt(ax.sy(hi[i])) << " ";
  }
  for (std::size_t i = xs.size(); i-- > 0;) {
    svg << fmt(ax.sx(xs[i])) << "," << fmt(ax.sy(lo[i])) << " ";
  }
  svg << "\"/>\n";
}

void svg_legend(std::ostringstream& svg, const std::vector<std::string>& methods) {
  double y = kTop + 14;
  for (const std::string& method : methods) {
    svg << "<line x1=\"" << kWidth - 170 << "\" y1=\"" << y - 4 << "\" x2=\""
        << kWidth - 145 << "\" y2=\"" << y - 4 << "\" stroke=\""
        << color_for(method) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kWidth - 140 << "\" y=\"" << y
        << "\" font-size=\"12\">" << method << "</text>\n";
    y += 16;
  }
}

void svg_footer(std::ostringstream& svg, const std::string& note) {
  svg << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 8
      << "\" font-size=\"10\" fill=\"#555555\">" << note << "</text>\n";
}

void svg_close(const std::string& path, std::ostringstream& svg) {
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << svg.str();
}

double log_clamp(double v, double lo) { return std::log10(std::max(v, lo)); }

}  // namespace

std::vector<EvalRecord> load_records(const std::string& dir) {
  if (!fs::exists(dir)) {
    throw std::runtime_error("records directory not found: " + dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" &&
        entry.path().filename().string().rfind("rec_", 0) == 0) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EvalRecord> records;
  records.reserve(files.size());
  for (const std::string& file : files) {
    records.push_back(EvalRecord::load_json(file));
  }
  return records;
}

void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "method,system,N,seed,traj_id,rms,diverged,solver_failures\n";
  for (const EvalRecord& record : records) {
    out << record.method << ',' << record.system << ',' << record.labelled_size
        << ',' << record.seed << ',' << record.traj_id << ','
        << csv::format_double(record.rms) << ',' << (record.diverged ? 1 : 0)
        << ',' << record.solver_failures << '\n';
  }
}

void write_summary_csv(const std::string& path, const RmsSummary& summary,
                       const std::string& system) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "method,system,N,median_rms,q1_rms,q3_rms,records,diverged,"
         "solver_failures,flagged_rollouts\n";
  for (const GroupSummary& gs : summary.per_group) {
    out << gs.method << ',' << system << ',' << gs.labelled_size << ','
        << csv::format_double(gs.median_rms) << ','
        << csv::format_double(gs.q1_rms) << ','
        << csv::format_double(gs.q3_rms) << ',' << gs.records << ','
        << gs.diverged << ',' << gs.solver_failures << ','
        << gs.flagged_rollouts << '\n';
  }
}

void write_error_profile_svg(const std::string& path,
                             const std::vector<EvalRecord>& records,
                             const std::string& system, int labelled_size) {
  std::map<std::string, std::vector<const EvalRecord*>> by_method;
  double t_max = 0.0;
  for (const EvalRecord& record : records) {
    if (record.system == system && record.labelled_size == labelled_size) {
      by_method[record.method].push_back(&record);
      t_max = std::max(t_max,
                       record.dt * (static_cast<double>(record.norm_error.size()) - 1));
    }
  }
  if (by_method.empty()) return;

  constexpr double kFloor = 1e-4;
  Axes ax{0.0, t_max, std::log10(kFloor), 2.0};
  std::ostringstream svg;
  svg_open(svg);
  svg_frame(svg, ax, "time [s]", "log10 normalized tracking error",
            system + ", N = " + std::to_string(labelled_size));
  for (double t = 0.0; t <= t_max + 1e-9; t += 1.0) {
    svg_x_tick(svg, ax, t, fmt(t));
  }
  for (int d = -4; d <= 2; ++d) {
    svg_y_tick(svg, ax, d, "1e" + std::to_string(d));
  }

  std::vector<std::string> methods;
  for (const auto& [method, group] : by_method) {
    methods.push_back(method);
    const TimeProfile profile = time_profile(group);
    if (profile.records == 0) continue;
    std::vector<double> ts, med, lo, hi;
    for (Eigen::Index k = 0; k < profile.times.size(); ++k) {
      ts.push_back(profile.times(k));
      med.push_back(log_clamp(profile.median(k), kFloor));
      lo.push_back(log_clamp(profile.q1(k), kFloor));
      hi.push_back(log_clamp(profile.q3(k), kFloor));
    }
    svg_band(svg, ax, ts, lo, hi, color_for(method));
    svg_polyline(svg, ax, ts, med, color_for(method), 1.8);
  }
  svg_legend(svg, methods);
  svg_footer(svg,
             "pointwise medians over non-diverged rollouts; shaded interquartile "
             "bands; linear-interpolation (Hazen) quantiles");
  svg_close(path, svg);
}

void write_rms_vs_n_svg(const std::string& path, const RmsSummary& summary,
                        const std::string& system) {
  std::map<std::string, std::vector<const GroupSummary*>> by_method;
  double n_min = 1e30, n_max = 0, y_min = 1e30, y_max = -1e30;
  for (const GroupSummary& gs : summary.per_group) {
    if (!std::isfinite(gs.median_rms) || gs.labelled_size <= 0) continue;
    by_method[gs.method].push_back(&gs);
    n_min = std::min(n_min, static_cast<double>(gs.labelled_size));
    n_max = std::max(n_max, static_cast<double>(gs.labelled_size));
    y_min = std::min(y_min, gs.q1_rms);
    y_max = std::max(y_max, gs.q3_rms);
  }
  if (by_method.empty()) return;
  y_min = std::max(y_min * 0.5, 1e-4);
  y_max = std::max(y_max * 2.0, y_min * 10.0);

  Axes ax{std::log10(n_min) - 0.1, std::log10(n_max) + 0.1, std::log10(y_min),
          std::log10(y_max)};
  std::ostringstream svg;
  svg_open(svg);
  svg_frame(svg, ax, "log10 N", "log10 RMS tracking error", system);
  for (double d = std::ceil(ax.x_min); d <= ax.x_max + 1e-9; d += 1.0) {
    svg_x_tick(svg, ax, d, fmt(d));
  }
  for (double d = std::ceil(ax.y_min); d <= ax.y_max + 1e-9; d += 1.0) {
    svg_y_tick(svg, ax, d, "1e" + fmt(d));
  }

  std::vector<std::string> methods;
  for (auto& [method, groups] : by_method) {
    methods.push_back(method);
    std::sort(groups.begin(), groups.end(),
              [](const GroupSummary* a, const GroupSummary* b) {
                return a->labelled_size < b->labelled_size;
              });
    std::vector<double> xs, med, lo, hi;
    for (const GroupSummary* gs : groups) {
      xs.push_back(std::log10(static_cast<double>(gs->labelled_size)));
      med.push_back(log_clamp(gs->median_rms, 1e-4));
      lo.push_back(log_clamp(gs->q1_rms, 1e-4));
      hi.push_back(log_clamp(gs->q3_rms, 1e-4));
    }
    svg_band(svg, ax, xs, lo, hi, color_for(method));
    svg_polyline(svg, ax, xs, med, color_for(method), 1.8);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      svg << "<circle cx=\"" << fmt(ax.sx(xs[i])) << "\" cy=\""
          << fmt(ax.sy(med[i])) << "\" r=\"3\" fill=\"" << color_for(method)
          << "\"/>\n";
    }
  }
  svg_legend(svg, methods);
  svg_footer(svg,
             "per-seed averages, medians and interquartile bands across seeds; "
             "linear-interpolation (Hazen) quantiles");
  svg_close(path, svg);
}

void write_report(const std::string& out_dir,
                  const std::vector<EvalRecord>& records) {
  fs::create_directories(out_dir);
  write_results_csv(out_dir + "/results.csv", records);

  std::set<std::string> systems;
  for (const EvalRecord& record : records) systems.insert(record.system);

  for (const std::string& system : systems) {
    std::vector<EvalRecord> sys_records;
    for (const EvalRecord& record : records) {
      if (record.system == system) sys_records.push_back(record);
    }
    const RmsSummary summary = summarize(sys_records);
    write_summary_csv(out_dir + "/summary_" + system + ".csv", summary, system);
    write_rms_vs_n_svg(out_dir + "/rms_vs_n_" + system + ".svg", summary, system);
    std::set<int> sizes;
    for (const EvalRecord& record : sys_records) sizes.insert(record.labelled_size);
    for (int size : sizes) {
      write_error_profile_svg(out_dir + "/error_vs_time_" + system + "_N" +
                                  std::to_string(size) + ".svg",
                              sys_records, system, size);
    }
  }
}

}  // namespace lcs::bench
