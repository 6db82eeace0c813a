#pragma once

// File outputs: trajectory CSV (t,x_1..x_n,f,grad_norm,arc_length), JSON
// summaries, critical point tables, and static SVG plots. Numbers are
// printed with %.17g so repeated runs produce byte-identical artifacts.

#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "gradflow/analysis.hpp"
#include "gradflow/critical.hpp"
#include "gradflow/flow.hpp"

namespace gradflow {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "t";
  const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples[0].x.size();
  for (Eigen::Index i = 0; i < n; ++i) s += ",x_" + std::to_string(i + 1);
  s += ",f,grad_norm,arc_length\n";
  for (const auto& sample : traj.samples) {
    s += format_double(sample.t);
    for (Eigen::Index i = 0; i < n; ++i)
      s += "," + format_double(sample.x[i]);
    s += "," + format_double(sample.f_value);
    s += "," + format_double(sample.grad_norm);
    s += "," + format_double(sample.arc_length);
    s += "\n";
  }
  return s;
}

inline nlohmann::json trajectory_summary(const Trajectory& traj) {
  nlohmann::json j;
  j["field_id"] = traj.field_id;
  j["stop_reason"] = to_string(traj.stop_reason);
  j["sample_count"] = traj.size();
  if (!traj.samples.empty()) {
    const auto& end = traj.back();
    j["t_end"] = end.t;
    j["endpoint"] = std::vector<double>(end.x.data(), end.x.data() + end.x.size());
    j["f_end"] = end.f_value;
    j["grad_norm_end"] = end.grad_norm;
    j["arc_length"] = end.arc_length;
  }
  return j;
}

inline std::string critical_points_csv(const std::vector<CriticalPoint>& pts) {
  std::string s = "location,value,eigenvalues,index,nullity,class\n";
  for (const auto& p : pts) {
    std::string loc, eig;
    for (Eigen::Index i = 0; i < p.location.size(); ++i)
      loc += (i ? ";" : "") + format_double(p.location[i]);
    for (Eigen::Index i = 0; i < p.eigenvalues.size(); ++i)
      eig += (i ? ";" : "") + format_double(p.eigenvalues[i]);
    s += loc + "," + format_double(p.value) + "," + eig + "," +
         std::to_string(p.index) + "," + std::to_string(p.nullity) + "," +
         to_string(p.cls) + "\n";
  }
  return s;
}

inline nlohmann::json critical_point_json(const CriticalPoint& p) {
  nlohmann::json j;
  j["location"] =
      std::vector<double>(p.location.data(), p.location.data() + p.location.size());
  j["value"] = p.value;
  j["eigenvalues"] = std::vector<double>(
      p.eigenvalues.data(), p.eigenvalues.data() + p.eigenvalues.size());
  j["index"] = p.index;
  j["nullity"] = p.nullity;
  j["class"] = to_string(p.cls);
  return j;
}

// Connection graph as JSON adjacency; branch trajectories referenced by file.
inline nlohmann::json connection_graph_json(
    const ConnectionReport& report, const std::vector<CriticalPoint>& points,
    const std::vector<std::string>& trajectory_files) {
  nlohmann::json j;
  j["critical_points"] = nlohmann::json::array();
  for (const auto& p : points) j["critical_points"].push_back(critical_point_json(p));
  j["connections"] = nlohmann::json::array();
  for (std::size_t i = 0; i < report.connections.size(); ++i) {
    const auto& c = report.connections[i];
    nlohmann::json e;
    e["source"] = c.source;
    e["target"] = c.target;
    e["branch_id"] = c.branch_id;
    e["expected_dimension"] = c.expected_dimension;
    if (i < trajectory_files.size()) e["trajectory_file"] = trajectory_files[i];
    j["connections"].push_back(e);
  }
  j["unresolved"] = report.unresolved;
  return j;
}

inline nlohmann::json analysis_fit_json(const AnalysisFit& fit) {
  nlohmann::json j;
  j["exponent"] = fit.exponent;
  j["log_constant"] = fit.log_constant;
  j["residual"] = fit.residual;
  j["window"] = {fit.window_begin, fit.window_end};
  j["sample_count"] = fit.sample_count;
  return j;
}

struct PlotStyle {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_x = false;
  bool log_y = false;
  // Overlay line y = slope * x + intercept in the (possibly log) plot space.
  std::optional<std::pair<double, double>> fit_line;
  std::optional<double> hline;  // horizontal reference, e.g. a median band
};

// Static SVG scatter/line plot. Returns the SVG body; pair it with the raw
// CSV of the series for post-hoc inspection.
inline std::string emit_plot_svg(const std::vector<std::pair<double, double>>& series,
                                 const PlotStyle& style) {
  if (series.size() < 2)
    throw std::invalid_argument("plot needs at least 2 points");
  auto tx = [&](double v) { return style.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return style.log_y ? std::log10(v) : v; };

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : series) {
    if ((style.log_x && x <= 0.0) || (style.log_y && y <= 0.0)) continue;
    double px = tx(x), py = ty(y);
    pts.emplace_back(px, py);
    xmin = std::min(xmin, px);
    xmax = std::max(xmax, px);
    ymin = std::min(ymin, py);
    ymax = std::max(ymax, py);
  }
  if (pts.size() < 2)
    throw std::invalid_argument("plot needs at least 2 plottable points");
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

  const double w = 640, h = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto sy = [&](double y) {
    return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
  };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
      "viewBox=\"0 0 640 480\">\n"
      "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(h - mb) +
         "\" x2=\"" + format_double(w - mr) + "\" y2=\"" + format_double(h - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(mt) +
         "\" x2=\"" + format_double(ml) + "\" y2=\"" + format_double(h - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         style.title + "</text>\n";
  svg += "<text x=\"320\" y=\"470\" text-anchor=\"middle\" font-size=\"12\">" +
         style.x_label + (style.log_x ? " (log10)" : "") + "</text>\n";
  svg += "<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-size=\"12\" "
         "transform=\"rotate(-90 16 240)\">" +
         style.y_label + (style.log_y ? " (log10)" : "") + "</text>\n";

  std::string path;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    path += (i == 0 ? "M" : "L") + format_double(sx(pts[i].first)) + " " +
            format_double(sy(pts[i].second));
    svg += "<circle cx=\"" + format_double(sx(pts[i].first)) + "\" cy=\"" +
           format_double(sy(pts[i].second)) +
           "\" r=\"2\" fill=\"steelblue\"/>\n";
  }
  svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"steelblue\" "
         "stroke-width=\"1\" opacity=\"0.6\"/>\n";

  if (style.fit_line) {
    // slope/intercept are in natural log space; convert to plot (log10) space.
    double slope = style.fit_line->first;
    double icept = style.fit_line->second;
    auto line_y = [&](double px) {
      if (style.log_x && style.log_y) {
        double lnx = px * std::numbers::ln10;
        return (slope * lnx + icept) / std::numbers::ln10;
      }
      return slope * px + icept;
    };
    svg += "<line x1=\"" + format_double(sx(xmin)) + "\" y1=\"" +
           format_double(sy(line_y(xmin))) + "\" x2=\"" + format_double(sx(xmax)) +
           "\" y2=\"" + format_double(sy(line_y(xmax))) +
           "\" stroke=\"crimson\" stroke-dasharray=\"6 3\"/>\n";
  }
  if (style.hline) {
    double py = ty(*style.hline);
    if (py >= ymin && py <= ymax)
      svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" +
             format_double(sy(py)) + "\" x2=\"" + format_double(w - mr) +
             "\" y2=\"" + format_double(sy(py)) +
             "\" stroke=\"seagreen\" stroke-dasharray=\"3 3\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string series_csv(const std::vector<std::pair<double, double>>& series,
                              const std::string& x_name = "x",
                              const std::string& y_name = "y") {
  std::string s = x_name + "," + y_name + "\n";
  for (const auto& [x, y] : series)
    s += format_double(x) + "," + format_double(y) + "\n";
  return s;
}

// SVG + CSV pair for a data series.
inline void emit_plot_data(const std::vector<std::pair<double, double>>& series,
                           const PlotStyle& style, const std::string& base_path) {
  write_text_file(base_path + ".svg", emit_plot_svg(series, style));
  write_text_file(base_path + ".csv",
                  series_csv(series, style.x_label, style.y_label));
}

}  // namespace gradflow
