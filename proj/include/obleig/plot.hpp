#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/csvio.hpp"
#include "obleig/errors.hpp"

namespace obleig {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

/// Deterministic 800 x 500 SVG line chart: fixed layout, fixed palette,
/// numbers through the same formatter as the CSV writers, so repeated runs
/// produce byte-identical files.
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series) {
  if (series.empty()) throw ConfigError("plot needs at least one series");
  const double W = 800, H = 500, ml = 70, mr = 20, mt = 40, mb = 55;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw SchemaMismatch("series with mismatched lengths");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw SchemaMismatch("plot has no finite points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
  auto fmt = [](double v) { return format_num(v); };

  static const char* palette[] = {"#1f6fb2", "#c23b22", "#2e8540", "#8250ab", "#b58900"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  out << "<rect width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << fmt(W / 2) << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(H - mb) << "\" x2=\"" << fmt(W - mr)
      << "\" y2=\"" << fmt(H - mb) << "\" stroke=\"#000\"/>\n";
  out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(ml) << "\" y2=\""
      << fmt(H - mb) << "\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    double xv = xmin + (xmax - xmin) * k / 5, yv = ymin + (ymax - ymin) * k / 5;
    out << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << fmt(H - mb) << "\" x2=\"" << fmt(px(xv))
        << "\" y2=\"" << fmt(H - mb + 5) << "\" stroke=\"#000\"/>\n";
    out << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(H - mb + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xv)
        << "</text>\n";
    out << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << fmt(ml)
        << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"#000\"/>\n";
    out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << fmt((ml + W - mr) / 2) << "\" y=\"" << fmt(H - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << fmt((mt + H - mb) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " << fmt((mt + H - mb) / 2) << ")\">" << ylabel
      << "</text>\n";
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << fmt(W - mr - 8) << "\" y=\"" << fmt(mt + 16 + 16 * double(si))
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
        << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

/// Plot two named numeric columns of a CSV, one series per distinct value
/// of an optional grouping column.
inline void plot_csv(const std::string& csv_path, const std::string& svg_path,
                     const std::string& xcol, const std::string& ycol,
                     const std::string& group_col = "") {
  CsvTable t = read_csv(csv_path);
  int xi = t.column(xcol), yi = t.column(ycol);
  int gi = group_col.empty() ? -1 : t.column(group_col);
  auto cell_num = [](const std::string& s) {
    try {
      size_t used = 0;
      double v = std::stod(s, &used);
      return used == s.size() ? v : std::numeric_limits<double>::quiet_NaN();
    } catch (...) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  std::vector<PlotSeries> series;
  for (const auto& row : t.rows) {
    std::string key = gi >= 0 ? row[gi] : ycol;
    PlotSeries* s = nullptr;
    for (auto& cand : series)
      if (cand.name == key) s = &cand;
    if (!s) {
      series.push_back({key, {}, {}});
      s = &series.back();
    }
    double x = cell_num(row[xi]), y = cell_num(row[yi]);
    if (std::isfinite(x) && std::isfinite(y)) {
      s->x.push_back(x);
      s->y.push_back(y);
    }
  }
  write_svg_plot(svg_path, ycol + " vs " + xcol, xcol, ycol, series);
}

}  // namespace obleig
