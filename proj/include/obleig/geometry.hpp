#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/domain.hpp"
#include "obleig/errors.hpp"
#include "obleig/fields.hpp"
#include "obleig/grid.hpp"

namespace obleig {

/// Mass of a nonnegative field over the truncation Omega_r(y):
/// lattice quadrature with full cells on nodes inside the domain.
inline double mass_of(const Domain& dom, const ScalarField& f, Point y, double r, double h) {
  TruncatedGrid g = TruncatedGrid::truncate(dom, y, r, h);
  double m = g.integrate([&](Point p) { return f(p); });
  if (!(m > 0)) throw InvalidMass("field mass over the truncation is not positive");
  return m;
}

/// First boundary hit along a ray from y, as a distance, or nullopt if the
/// ray stays inside up to max_t. Marching plus bisection on the SDF sign.
inline std::optional<double> first_boundary_hit(const Domain& dom, Point y, Point dir,
                                                double max_t, int steps = 512) {
  double step = max_t / steps;
  double prev = 0;
  for (int k = 1; k <= steps; ++k) {
    double t = k * step;
    if (dom.sdf(y + dir * t) <= 0) {
      double lo = prev, hi = t;
      for (int it = 0; it < 60; ++it) {
        double mid = (lo + hi) / 2;
        (dom.sdf(y + dir * mid) > 0 ? lo : hi) = mid;
      }
      return (lo + hi) / 2;
    }
    prev = t;
  }
  return std::nullopt;
}

struct TransversalityReport {
  bool sphere_meets_boundary = false;
  /// max over detected contacts of |nu(x) . (x-y)| / |x-y|; 1 means the
  /// sphere is tangent to the boundary there, 0 a right-angle cut.
  /// Stays -1 when the sphere never meets the boundary.
  double max_alignment = -1.0;
  /// Alignment bounded away from 1 by tol (vacuously true off the boundary).
  bool transversal = true;
  double tol = 0.0;
  std::vector<Point> crossings;
};

/// Sampling audit of transversality between the truncation sphere around y
/// and the domain boundary. Crossings are located by angular bisection of
/// the first-hit radius; grazing contacts (first hit equal to r without a
/// sign change) count as tangencies. A sampling check, not a proof; rays
/// control the resolution.
inline TransversalityReport transversality_check(const Domain& dom, Point y, double r,
                                                 int rays = 1440, double tol = 0.05) {
  TransversalityReport rep;
  rep.tol = tol;
  if (dom.boundaryless()) return rep;
  auto note = [&](Point x) {
    Point nu = dom.outward_normal(dom.project_to_boundary(x));
    double align = std::abs(dot(nu, x - y)) / std::max(1e-300, dist(x, y));
    rep.sphere_meets_boundary = true;
    rep.max_alignment = std::max(rep.max_alignment, align);
    rep.crossings.push_back(x);
  };
  if (dom.dim() == 1) {
    // The sphere is the point pair y +- r; it meets the boundary only by
    // landing on it, which in one dimension is always a tangency.
    for (double s : {1.0, -1.0}) {
      Point x = y + Point{s, 0} * r;
      if (std::abs(dom.sdf(x)) <= 1e-9 * std::max(1.0, r)) note(x);
    }
  } else {
    double probe = 1.25 * r;
    auto hit = [&](double th) {
      return first_boundary_hit(dom, y, {std::cos(th), std::sin(th)}, probe);
    };
    std::vector<std::optional<double>> rad(rays);
    for (int k = 0; k < rays; ++k) rad[k] = hit(2 * kPi * k / rays);
    double touch = 1e-7 * std::max(1.0, r);
    for (int k = 0; k < rays; ++k) {
      if (rad[k] && std::abs(*rad[k] - r) <= touch) {
        note(y + Point{std::cos(2 * kPi * k / rays), std::sin(2 * kPi * k / rays)} * *rad[k]);
        continue;
      }
      auto a = rad[k], b = rad[(k + 1) % rays];
      if (!a || !b) continue;
      double fa = *a - r, fb = *b - r;
      if (fa * fb >= 0) continue;
      double lo = 2 * kPi * k / rays, hi = 2 * kPi * (k + 1) / rays;
      double flo = fa;
      for (int it = 0; it < 50; ++it) {
        double mid = (lo + hi) / 2;
        auto t = hit(mid);
        if (!t) break;  // first-hit branch switched between rays; keep bracket
        double fm = *t - r;
        if (flo * fm <= 0) hi = mid;
        else {
          lo = mid;
          flo = fm;
        }
      }
      auto t = hit((lo + hi) / 2);
      if (!t) continue;
      note(y + Point{std::cos((lo + hi) / 2), std::sin((lo + hi) / 2)} * *t);
    }
  }
  rep.transversal = !rep.sphere_meets_boundary || rep.max_alignment <= 1.0 - tol;
  return rep;
}

/// A-priori bound on the smallest shell-to-mass growth ratio over radii
/// r0, 2 r0, ..., (n+1) r0: if every shell beat this ratio the accumulated
/// mass would overshoot the trivial volume bound f_sup |B_1| ((n+1) r0)^d.
/// m_floor is a lower bound on the mass at radius r0.
inline double growth_ratio_bound(double m_floor, double f_sup, int n, int d, double r0 = 1.0) {
  if (!(m_floor > 0)) throw InvalidMass("growth bound needs a positive mass floor");
  if (n < 1) throw ConfigError("growth bound needs n >= 1");
  double x = unit_ball_volume(d) * std::pow(r0, d) / m_floor * f_sup;
  return std::pow(x * n * std::pow(double(n + 1), d) + 1.0, 1.0 / n) - 1.0;
}

struct GrowthAudit {
  std::vector<double> radii;        // (m+1) r0 for m = 1..n
  std::vector<double> masses;       // f-mass of Omega_{m r0}(y), m = 1..n+1
  std::vector<double> shell_masses; // f-mass of Omega_{(m+1) r0}(y) \ B_{m r0}(y)
  std::vector<double> ratios;       // shell_masses[m-1] / masses[m-1]
  double omega1_mass = 0.0;
  double f_sup = 0.0;
  double bound = 0.0;
  double min_ratio = 0.0;
  double slack = 0.0;               // quadrature allowance the audit grants
  bool ok = false;                  // min_ratio < bound + slack
};

/// Shell-growth audit: the f-mass captured between consecutive truncations,
/// relative to the inner mass, must dip below the a-priori bound somewhere
/// on the schedule. The shell at step m collects nodes of Omega_{(m+1)r0}
/// farther than m r0 from the centre, so disconnected pockets reachable only
/// from outside the inner ball are counted, matching the set difference.
inline GrowthAudit growth_audit(const Domain& dom, const ScalarField& f, Point y, int n,
                                double h, double r0 = 1.0) {
  if (n < 1) throw ConfigError("growth audit needs n >= 1");
  GrowthAudit a;
  std::vector<TruncatedGrid> grids;
  grids.reserve(n + 1);
  for (int m = 1; m <= n + 1; ++m)
    grids.push_back(TruncatedGrid::truncate(dom, y, r0 * m, h));
  for (int m = 1; m <= n + 1; ++m)
    a.masses.push_back(grids[m - 1].integrate([&](Point p) { return f(p); }));
  if (!(a.masses[0] > 0)) throw InvalidMass("empty inner truncation mass");
  a.omega1_mass = a.masses[0];
  for (int m = 1; m <= n; ++m) {
    const TruncatedGrid& g = grids[m];
    double inner = r0 * m;
    double shell = 0;
    double cell = std::pow(g.h(), dom.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const GridNode& nd = g.node(i);
      if (nd.role == NodeRole::cap) continue;
      if (nd.role == NodeRole::oblique && nd.sdf <= 0) continue;
      if (nd.radius > inner) shell += f(nd.pos) * cell;
    }
    a.shell_masses.push_back(shell);
    a.radii.push_back(r0 * (m + 1));
    a.ratios.push_back(shell / a.masses[m - 1]);
  }
  double fs = 0;
  for (std::size_t i = 0; i < grids.back().size(); ++i)
    fs = std::max(fs, f(grids.back().node(i).pos));
  a.f_sup = fs;
  a.bound = growth_ratio_bound(a.omega1_mass, std::max(fs, 1e-300), n, dom.dim(), r0);
  a.min_ratio = *std::min_element(a.ratios.begin(), a.ratios.end());
  a.slack = 10.0 * h;
  a.ok = a.min_ratio < a.bound + a.slack;
  return a;
}

struct InteriorBallAudit {
  bool omega1_ok = false;
  bool annulus_ok = false;
  double omega1_measured = 0.0;
  double omega1_bound = 0.0;  // |B_1| min(rho, 1/2)^d
  double annulus_bound = 0.0; // |B_1| min(rho, 1/4)^d
  std::vector<double> annulus_radii;
  std::vector<double> annulus_measured;
  double quad_tol = 0.0;
  double rho = 0.0;
};

/// Checks the measure of the unit truncation and of consecutive shells
/// against the lower bounds implied by a claimed interior-ball radius.
/// A domain claiming a radius its boundary does not honour (a cusp or a
/// sharp wedge) fails the unit-truncation bound, which is what the audit
/// is for.
inline InteriorBallAudit interior_ball_bounds(const Domain& dom, Point y, double rho, double h,
                                              std::vector<double> annulus_radii = {1, 2, 3}) {
  if (!(rho > 0)) throw ConfigError("interior-ball audit needs rho > 0");
  InteriorBallAudit a;
  int d = dom.dim();
  a.rho = rho;
  a.quad_tol = 6.0 * d * h;
  a.omega1_bound = unit_ball_volume(d) * std::pow(std::min(rho, 0.5), d);
  a.annulus_bound = unit_ball_volume(d) * std::pow(std::min(rho, 0.25), d);
  a.omega1_measured = TruncatedGrid::truncate(dom, y, 1.0, h).measure();
  a.omega1_ok = a.omega1_measured >= a.omega1_bound - a.quad_tol;
  a.annulus_ok = true;
  for (double r : annulus_radii) {
    TruncatedGrid g = TruncatedGrid::truncate(dom, y, r + 1, h);
    double cell = std::pow(g.h(), d);
    double shell = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const GridNode& nd = g.node(i);
      if (nd.role == NodeRole::cap) continue;
      if (nd.role == NodeRole::oblique && nd.sdf <= 0) continue;
      if (nd.radius > r) shell += cell;
    }
    a.annulus_radii.push_back(r);
    a.annulus_measured.push_back(shell);
    double tol = a.quad_tol * std::pow(r + 1, d - 1);
    if (shell < a.annulus_bound - tol) a.annulus_ok = false;
  }
  return a;
}

/// Lattice of points with spacing r/(2 sqrt(d)) clipped to |z - centre| <=
/// R + r/4, so every point of B_R(centre) lies within r/4 of the lattice.
inline std::vector<Point> covering_lattice(double r, double R, int d, Point centre = {0, 0}) {
  if (!(r > 0) || !(R > 0)) throw ConfigError("covering needs positive radii");
  double s = r / (2 * std::sqrt(double(d)));
  double reach = R + r / 4;
  auto n = static_cast<std::int64_t>(std::ceil(reach / s));
  std::vector<Point> out;
  for (std::int64_t i = -n; i <= n; ++i) {
    if (d == 1) {
      if (std::abs(double(i) * s) <= reach) out.push_back(centre + Point{double(i) * s, 0});
      continue;
    }
    for (std::int64_t j = -n; j <= n; ++j) {
      Point z{double(i) * s, double(j) * s};
      if (norm(z) <= reach) out.push_back(centre + z);
    }
  }
  return out;
}

struct CoveringReport {
  double radius = 0.0;
  double bounding_radius = 0.0;
  std::vector<Point> cover_points;
  int cardinality = 0;
  int lattice_bound = 0;
};

/// Internal covering of a sample cloud E inside B_R(centre): one
/// representative of E per populated lattice half-ball B_{r/2}(z). Every
/// sample then lies within 3r/4 of its cell's representative, so balls of
/// radius r around the cover contain E, and the cardinality is capped by
/// the lattice size, which depends only on (r, R, d).
inline CoveringReport internal_covering(const std::vector<Point>& samples, double r, double R,
                                        int d, Point centre = {0, 0}) {
  if (samples.empty()) throw ConfigError("covering needs a nonempty sample set");
  if (!(r > 0) || !(r < R)) throw ConfigError("covering needs 0 < r < R");
  CoveringReport rep;
  rep.radius = r;
  rep.bounding_radius = R;
  std::vector<Point> lattice = covering_lattice(r, R, d, centre);
  rep.lattice_bound = static_cast<int>(lattice.size());
  std::vector<char> used(samples.size(), 0);
  for (const Point& z : lattice) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (dist(samples[i], z) <= r / 2) {
        if (!used[i]) {
          used[i] = 1;
          rep.cover_points.push_back(samples[i]);
        }
        break;
      }
    }
  }
  rep.cardinality = static_cast<int>(rep.cover_points.size());
  return rep;
}

}  // namespace obleig
