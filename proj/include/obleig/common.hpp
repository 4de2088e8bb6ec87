#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace obleig {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Point in the plane. One-dimensional problems use the x coordinate and keep
/// y at zero; the active dimension is carried by the domain, not the point.
struct Point {
  double x = 0.0;
  double y = 0.0;

  Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
  Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Point& p) { return std::sqrt(p.x * p.x + p.y * p.y); }
inline double dist(const Point& a, const Point& b) { return norm(a - b); }

/// Axis-aligned box, used for sample regions and probe windows.
struct Box {
  Point lo;
  Point hi;

  bool contains(const Point& p, int dim) const {
    if (p.x < lo.x || p.x > hi.x) return false;
    if (dim > 1 && (p.y < lo.y || p.y > hi.y)) return false;
    return true;
  }
};

/// Volume of the unit ball in dimension d (d = 1 or 2).
inline double unit_ball_volume(int dim) { return dim == 1 ? 2.0 : kPi; }

/// Fixed decimal formatting used by every artifact writer, so repeated runs
/// produce byte-identical files.
inline std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

}  // namespace obleig
