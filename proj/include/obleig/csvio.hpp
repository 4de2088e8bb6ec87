#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "obleig/averages.hpp"
#include "obleig/common.hpp"
#include "obleig/eigensolver.hpp"
#include "obleig/errors.hpp"
#include "obleig/geometry.hpp"
#include "obleig/parabolic.hpp"

namespace obleig {

/// Minimal CSV table: header names and rows of string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw SchemaMismatch("missing column '" + name + "'");
  }
};

inline void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  for (size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw SchemaMismatch("empty CSV: " + path);
  return t;
}

inline CsvTable sweep_table(const SweepResult& s) {
  CsvTable t;
  t.header = {"center_x", "center_y", "r", "h", "lambda", "residual", "iterations"};
  for (const SweepPoint& p : s.points)
    t.rows.push_back({format_num(p.y.x), format_num(p.y.y), format_num(p.r), format_num(p.h),
                      format_num(p.lambda), format_num(p.residual), std::to_string(p.iterations)});
  return t;
}

inline CsvTable global_sweep_table(const GlobalSweepResult& s) {
  CsvTable t;
  t.header = {"center_x", "center_y", "r", "h", "lambda", "residual", "iterations"};
  for (size_t ri = 0; ri < s.radii.size(); ++ri)
    for (size_t ci = 0; ci < s.centres.size(); ++ci)
      t.rows.push_back({format_num(s.centres[ci].x), format_num(s.centres[ci].y),
                        format_num(s.radii[ri]), "", format_num(s.lambda[ri][ci]), "", ""});
  return t;
}

inline CsvTable growth_table(const GrowthAudit& a) {
  CsvTable t;
  t.header = {"r", "inner_mass", "shell_mass", "ratio", "bound"};
  for (size_t k = 0; k < a.ratios.size(); ++k)
    t.rows.push_back({format_num(a.radii[k]), format_num(a.masses[k]),
                      format_num(a.shell_masses[k]), format_num(a.ratios[k]),
                      format_num(a.bound)});
  return t;
}

inline CsvTable averages_table(const AverageSchedule& s, const LeastMeanResult* least) {
  CsvTable t;
  t.header = {"r", "mean", "least_mean", "argmin_center"};
  for (size_t k = 0; k < s.radii.size(); ++k) {
    std::string lm, am;
    if (least) {
      lm = format_num(least->value);
      am = format_num(least->argmin_centre.x);
    }
    t.rows.push_back({format_num(s.radii[k]), format_num(s.means[k]), lm, am});
  }
  return t;
}

/// Little-endian trajectory container: magic "OBLP", u32 dimension,
/// u64 node count, then per frame a f64 time followed by node-count f64
/// values in system order.
inline void write_oblp(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.write("OBLP", 4);
  std::uint32_t dim = static_cast<std::uint32_t>(traj.grid->dim());
  std::uint64_t n = traj.frames.empty() ? 0 : static_cast<std::uint64_t>(traj.frames[0].size());
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (size_t k = 0; k < traj.frames.size(); ++k) {
    double t = traj.times[k];
    out.write(reinterpret_cast<const char*>(&t), 8);
    out.write(reinterpret_cast<const char*>(traj.frames[k].data()),
              static_cast<std::streamsize>(8 * n));
  }
}

struct OblpData {
  std::uint32_t dim = 0;
  std::uint64_t nodes = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> frames;
};

inline OblpData read_oblp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "OBLP", 4) != 0)
    throw SchemaMismatch("not a trajectory file: " + path);
  OblpData d;
  in.read(reinterpret_cast<char*>(&d.dim), 4);
  in.read(reinterpret_cast<char*>(&d.nodes), 8);
  if (!in || d.dim < 1 || d.dim > 2) throw SchemaMismatch("corrupt trajectory header");
  for (;;) {
    double t;
    in.read(reinterpret_cast<char*>(&t), 8);
    if (in.gcount() == 0) break;
    if (in.gcount() != 8) throw SchemaMismatch("truncated trajectory frame");
    std::vector<double> frame(d.nodes);
    in.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(8 * d.nodes));
    if (static_cast<std::uint64_t>(in.gcount()) != 8 * d.nodes)
      throw SchemaMismatch("truncated trajectory frame");
    d.times.push_back(t);
    d.frames.push_back(std::move(frame));
  }
  return d;
}

}  // namespace obleig
