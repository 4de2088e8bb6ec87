#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/domain.hpp"
#include "obleig/errors.hpp"
#include "obleig/fields.hpp"
#include "obleig/geometry.hpp"

namespace obleig {

/// Mean of a field over the truncation Omega_r(y), lattice quadrature.
inline double mean_of(const Domain& dom, const ScalarField& f, Point y, double r, double h) {
  TruncatedGrid g = TruncatedGrid::truncate(dom, y, r, h);
  double vol = g.measure();
  if (!(vol > 0)) throw InvalidMass("truncation has no measure");
  return g.integrate([&](Point p) { return f(p); }) / vol;
}

struct AverageSchedule {
  std::vector<double> radii;
  std::vector<double> means;
  double estimate = 0;  // min over the last third of the schedule
};

/// Window means at one centre over a growing radius schedule. The reported
/// estimate is the smallest mean over the last third of the schedule, a
/// finite surrogate for the liminf of r-means.
inline AverageSchedule mean_schedule(const Domain& dom, const ScalarField& f, Point y,
                                     const std::vector<double>& radii, double h) {
  if (radii.empty()) throw ConfigError("mean schedule needs radii");
  AverageSchedule s;
  s.radii = radii;
  for (double r : radii) s.means.push_back(mean_of(dom, f, y, r, h));
  size_t n = s.means.size();
  size_t start = n - std::max<size_t>(1, n / 3);
  s.estimate = *std::min_element(s.means.begin() + start, s.means.end());
  return s;
}

struct MeanRow {
  Point centre;
  double r = 0;
  double mean = 0;
};

struct LeastMeanResult {
  std::vector<MeanRow> rows;
  double value = 0;  // smallest mean over all centre/radius pairs
  Point argmin_centre;
  double argmin_radius = 0;
};

/// Smallest window mean over a set of centres and small radii: the probe
/// that finds pockets where the field stays low no matter how favourable
/// its large-window averages look.
inline LeastMeanResult least_mean_of(const Domain& dom, const ScalarField& f,
                                     const std::vector<Point>& centres,
                                     const std::vector<double>& radii, double h) {
  if (centres.empty() || radii.empty()) throw ConfigError("least mean needs centres and radii");
  LeastMeanResult out;
  bool first = true;
  for (Point c : centres) {
    for (double r : radii) {
      double m = mean_of(dom, f, c, r, h);
      out.rows.push_back({c, r, m});
      if (first || m < out.value) {
        out.value = m;
        out.argmin_centre = c;
        out.argmin_radius = r;
        first = false;
      }
    }
  }
  return out;
}

struct AverageAudit {
  double lambda_estimate = 0;
  double mean_estimate = 0;
  double margin = 0;
  bool holds = false;  // lambda_estimate <= -mean_estimate + margin
};

/// Cross-check between an eigenvalue estimate and the window-mean
/// estimate: for operators whose zeroth-order part is the field, the
/// eigenvalue sits at or below the negated mean, up to the stated margin.
inline AverageAudit average_bound_audit(double lambda_estimate, double mean_estimate,
                                        double margin) {
  AverageAudit a;
  a.lambda_estimate = lambda_estimate;
  a.mean_estimate = mean_estimate;
  a.margin = margin;
  a.holds = lambda_estimate <= -mean_estimate + margin;
  return a;
}

}  // namespace obleig
