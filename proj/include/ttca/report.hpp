#pragma once

// Writing comparison results to disk: one trajectory CSV per planner, a
// metrics table, and optionally an SVG of both driven paths.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ttca/error.hpp"
#include "ttca/planner.hpp"
#include "ttca/vehicle_sim.hpp"

namespace ttca {

inline constexpr const char* kCpfTrajectoryFile = "cpf_traj.csv";
inline constexpr const char* kTtcaTrajectoryFile = "ttca_traj.csv";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kPlotFile = "paths.svg";

struct MetricField {
  const char* name;
  double LcMetrics::*member;
};

inline constexpr std::array<MetricField, 10> kMetricFields{{
    {"path_length", &LcMetrics::path_length},
    {"lc_start_x", &LcMetrics::lc_start_x},
    {"lc_end_x", &LcMetrics::lc_end_x},
    {"lc_duration", &LcMetrics::lc_duration},
    {"max_yaw_deg", &LcMetrics::max_yaw},
    {"max_yaw_rate_degps", &LcMetrics::max_yaw_rate},
    {"max_front_tire_angle_deg", &LcMetrics::max_front_tire_angle},
    {"max_sideslip_deg", &LcMetrics::max_sideslip},
    {"max_curvature", &LcMetrics::max_curvature},
    {"terminal_lane_offset", &LcMetrics::terminal_lane_offset},
}};

// Empty cells stand for a run that produced no lane change.
inline std::string metrics_csv(const std::optional<LcMetrics>& cpf,
                               const std::optional<LcMetrics>& ttca) {
  std::ostringstream os;
  os << "metric,cpf,ttca,reduction\n";
  for (const auto& f : kMetricFields) {
    os << f.name << ',';
    if (cpf) os << format_double((*cpf).*f.member);
    os << ',';
    if (ttca) os << format_double((*ttca).*f.member);
    os << ',';
    if (cpf && ttca) os << format_double(reduction((*cpf).*f.member, (*ttca).*f.member));
    os << '\n';
  }
  return os.str();
}

inline std::string metrics_csv(const ComparisonReport& r) {
  return metrics_csv(r.cpf.metrics, r.ttca.metrics);
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + p.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace detail

struct PlotSeries {
  std::string label;
  std::string color;
  const TrajectoryLog* log = nullptr;
};

// Both driven paths on one x-y chart. The lateral axis is exaggerated so a
// few meters of lane change stay visible over hundreds of meters of road.
inline std::string paths_svg(const std::vector<PlotSeries>& series,
                             const RoadGeometry& road) {
  constexpr double W = 900.0, H = 300.0, pad = 40.0;
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  for (const auto& s : series) {
    for (const auto& p : s.log->samples) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
    }
  }
  if (!(x1 > x0)) {
    x0 = 0.0;
    x1 = 1.0;
  }
  const double y0 = road.edge_lower_y;
  const double y1 = road.edge_upper_y;
  const auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  const auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto hline = [&](double y, const char* style) {
    os << "<line x1=\"" << pad << "\" y1=\"" << py(y) << "\" x2=\"" << W - pad << "\" y2=\""
       << py(y) << "\" stroke=\"gray\" " << style << "/>\n";
  };
  hline(road.edge_lower_y, "stroke-width=\"2\"");
  hline(road.edge_upper_y, "stroke-width=\"2\"");
  for (double d : road.lane_divider_ys) hline(d, "stroke-dasharray=\"8,6\"");
  int row = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    const auto& v = s.log->samples;
    const std::size_t every = std::max<std::size_t>(1, v.size() / 2000);
    for (std::size_t i = 0; i < v.size(); i += every) os << px(v[i].x) << ',' << py(v[i].y) << ' ';
    if (!v.empty()) os << px(v.back().x) << ',' << py(v.back().y);
    os << "\"/>\n";
    os << "<text x=\"" << pad + 10 << "\" y=\"" << 20 + 16 * row++ << "\" fill=\"" << s.color
       << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.label << "</text>\n";
  }
  os << "<text x=\"" << pad << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"11\">x "
     << format_double(x0) << " .. " << format_double(x1) << " m</text>\n";
  os << "</svg>\n";
  return os.str();
}

inline void export_run(const PlanResult& r, const std::filesystem::path& file) {
  std::ostringstream os;
  write_trajectory_csv(os, r.log);
  detail::write_text(file, os.str());
}

inline TrajectoryLog import_trajectory(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  return read_trajectory_csv(in, file.string());
}

// Writes cpf_traj.csv, ttca_traj.csv, metrics.csv and optionally paths.svg.
inline void export_report(const ComparisonReport& r, const Scenario& s,
                          const std::filesystem::path& dir, bool plot) {
  detail::ensure_dir(dir);
  export_run(r.cpf, dir / kCpfTrajectoryFile);
  export_run(r.ttca, dir / kTtcaTrajectoryFile);
  detail::write_text(dir / kMetricsFile, metrics_csv(r));
  if (plot) {
    detail::write_text(dir / kPlotFile,
                       paths_svg({{"CPF-LC", "#c0392b", &r.cpf.log},
                                  {"TTCA-LC", "#2563eb", &r.ttca.log}},
                                 s.road));
  }
}

}  // namespace ttca
