#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"

namespace obleig {

/// Unbounded (or bounded) domain described by a signed distance function,
/// positive inside. Composite shapes give a conservative SDF (exact for the
/// primitives, a lower bound on the true distance for unions/intersections,
/// which is all the truncation and anchoring logic needs).
class Domain {
 public:
  using Sdf = std::function<double(Point)>;

  Domain(int dim, Sdf sdf, std::string desc)
      : dim_(dim), sdf_(std::move(sdf)), desc_(std::move(desc)) {
    if (dim != 1 && dim != 2) throw DimensionMismatch("domain dimension must be 1 or 2");
  }

  int dim() const { return dim_; }
  const std::string& describe() const { return desc_; }

  double sdf(Point p) const { return sdf_(p); }
  bool inside(Point p) const { return sdf_(p) > 0; }

  /// True when the domain has no boundary at all (whole space); oblique
  /// conditions are then vacuous and every lattice neighbour is interior.
  bool boundaryless() const { return boundaryless_; }
  Domain& mark_boundaryless() {
    boundaryless_ = true;
    return *this;
  }

  /// Radius rho of the interior-ball guarantee this domain declares: every
  /// boundary point is touched from inside by a ball of radius rho. Zero
  /// means no guarantee (cusps allowed).
  double interior_ball_radius() const { return interior_ball_; }
  Domain& declare_interior_ball(double rho) {
    interior_ball_ = rho;
    return *this;
  }

  /// Finite-difference gradient of the SDF; step scaled to the query point.
  Point sdf_gradient(Point p, double h = 1e-6) const {
    double s = h * std::max(1.0, std::max(std::abs(p.x), std::abs(p.y)));
    Point g;
    g.x = (sdf_({p.x + s, p.y}) - sdf_({p.x - s, p.y})) / (2 * s);
    if (dim_ == 2) g.y = (sdf_({p.x, p.y + s}) - sdf_({p.x, p.y - s})) / (2 * s);
    return g;
  }

  /// Unit outward normal at (or near) the boundary: minus the normalized
  /// SDF gradient, since the SDF increases inward.
  Point outward_normal(Point p) const {
    Point g = sdf_gradient(p);
    double n = norm(g);
    if (n < 1e-12) throw ObliquenessViolation("degenerate SDF gradient; cannot form a normal");
    return {-g.x / n, -g.y / n};
  }

  /// Project a near-boundary point onto the zero level set by a few Newton
  /// steps along the SDF gradient. Accurate to o(h^2) for points within a
  /// grid spacing of the boundary of a smooth piece.
  Point project_to_boundary(Point p) const {
    Point q = p;
    for (int it = 0; it < 4; ++it) {
      double s = sdf_(q);
      if (std::abs(s) < 1e-13) break;
      Point g = sdf_gradient(q);
      double gg = dot(g, g);
      if (gg < 1e-18) break;
      q = q - g * (s / gg);
    }
    return q;
  }

  /// Uniformly spread sample of boundary points within distance r of y,
  /// found by marching rays from y and bisecting the SDF sign change. Used
  /// by the transversality audit. Rays that stay inside contribute nothing.
  std::vector<Point> sample_boundary(Point y, double r, int rays = 720) const {
    std::vector<Point> out;
    if (boundaryless_) return out;
    if (dim_ == 1) rays = 2;
    for (int k = 0; k < rays; ++k) {
      double th = dim_ == 1 ? (k == 0 ? 0.0 : kPi) : 2 * kPi * k / rays;
      Point dir{std::cos(th), dim_ == 1 ? 0.0 : std::sin(th)};
      // walk out from y looking for a sign change before radius r
      double lo = 0, step = r / 256;
      bool found = false;
      double hi = 0;
      for (double t = step; t <= r + 1e-12; t += step) {
        if (sdf_(y + dir * t) <= 0) {
          lo = t - step;
          hi = t;
          found = true;
          break;
        }
      }
      if (!found) continue;
      for (int it = 0; it < 50; ++it) {
        double mid = (lo + hi) / 2;
        (sdf_(y + dir * mid) > 0 ? lo : hi) = mid;
      }
      out.push_back(y + dir * ((lo + hi) / 2));
    }
    return out;
  }

  // Factories

  static Domain whole_space(int dim) {
    Domain d(dim, [](Point) { return 1e30; }, dim == 1 ? "line" : "plane");
    d.mark_boundaryless();
    d.declare_interior_ball(1e30);
    return d;
  }

  /// Strip |axis - center| < half_width; axis 0 is x, axis 1 is y. In one
  /// dimension this is the interval (center - hw, center + hw).
  static Domain strip(double half_width, int axis, double center, int dim) {
    auto sdf = [=](Point p) {
      double c = axis == 0 ? p.x : p.y;
      return half_width - std::abs(c - center);
    };
    Domain d(dim, sdf, "strip");
    d.declare_interior_ball(half_width);
    return d;
  }

  static Domain ball(Point c, double r, int dim) {
    auto sdf = [=](Point p) { return r - dist(p, c); };
    Domain d(dim, sdf, "ball");
    d.declare_interior_ball(r);
    return d;
  }

  static Domain ball_complement(Point c, double r, int dim) {
    auto sdf = [=](Point p) { return dist(p, c) - r; };
    Domain d(dim, sdf, "ball complement");
    d.declare_interior_ball(r);  // exterior of a ball: osculating interior ball radius r
    return d;
  }

  static Domain half_plane(Point normal_in, double offset, int dim) {
    // inside where normal . p > offset
    double n = norm(normal_in);
    Point nu{normal_in.x / n, normal_in.y / n};
    auto sdf = [=](Point p) { return dot(nu, p) - offset; };
    Domain d(dim, sdf, "half plane");
    d.declare_interior_ball(1e30);
    return d;
  }

  static Domain annulus(Point c, double r_in, double r_out, int dim) {
    auto sdf = [=](Point p) {
      double t = dist(p, c);
      return std::min(t - r_in, r_out - t);
    };
    Domain d(dim, sdf, "annulus");
    d.declare_interior_ball((r_out - r_in) / 2);
    return d;
  }

  static Domain join(std::vector<Domain> parts, double interior_ball, std::string desc) {
    if (parts.empty()) throw ConfigError("union of zero shapes");
    int dim = parts[0].dim();
    for (auto& p : parts)
      if (p.dim() != dim) throw DimensionMismatch("union mixes dimensions");
    auto shared = std::make_shared<std::vector<Domain>>(std::move(parts));
    auto sdf = [shared](Point p) {
      double best = -1e30;
      for (auto& d : *shared) best = std::max(best, d.sdf(p));
      return best;
    };
    Domain d(dim, sdf, std::move(desc));
    d.declare_interior_ball(interior_ball);
    return d;
  }

  static Domain meet(std::vector<Domain> parts, double interior_ball, std::string desc) {
    if (parts.empty()) throw ConfigError("intersection of zero shapes");
    int dim = parts[0].dim();
    for (auto& p : parts)
      if (p.dim() != dim) throw DimensionMismatch("intersection mixes dimensions");
    auto shared = std::make_shared<std::vector<Domain>>(std::move(parts));
    auto sdf = [shared](Point p) {
      double best = 1e30;
      for (auto& d : *shared) best = std::min(best, d.sdf(p));
      return best;
    };
    Domain d(dim, sdf, std::move(desc));
    d.declare_interior_ball(interior_ball);
    return d;
  }

 private:
  int dim_;
  Sdf sdf_;
  std::string desc_;
  bool boundaryless_ = false;
  double interior_ball_ = 0.0;
};

/// Hair-trigger playground: the unit ball around the origin, a thin
/// horizontal corridor, and a chain of concentric annular shells with inner
/// radii 2^n. Connected, unbounded, uniformly smooth boundary pieces, and
/// the shells carry most of the far-field area.
inline Domain annuli_chain(int n_max, int dim = 2) {
  std::vector<Domain> parts;
  parts.push_back(Domain::ball({0, 0}, 1.0, dim));
  parts.push_back(Domain::strip(0.6, 1, 0.0, dim));
  for (int n = 1; n <= n_max; ++n) {
    double r = std::ldexp(1.0, n);
    parts.push_back(Domain::annulus({0, 0}, r, r + 1.0, dim));
  }
  return Domain::join(std::move(parts), 0.5, "annuli chain");
}

}  // namespace obleig
