#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"
#include "obleig/expr.hpp"

namespace obleig {

/// Scalar coefficient field over the domain. Carries an optional symbolic
/// form (used by certificate checking for exact derivatives) and optional
/// a-priori bounds used by assembly-time sanity checks.
class ScalarField {
 public:
  ScalarField() : fn_([](Point) { return 0.0; }) {}
  explicit ScalarField(std::function<double(Point)> fn) : fn_(std::move(fn)) {}
  ScalarField(std::function<double(Point)> fn, Expr sym)
      : fn_(std::move(fn)), sym_(std::move(sym)) {}

  static ScalarField constant(double v) {
    ScalarField f([v](Point) { return v; }, Expr::constant(v));
    f.lo_ = f.hi_ = v;
    return f;
  }

  /// Smooth step in x: equals lo for x <= x0, hi for x >= x1, with the cubic
  /// smoothstep blend in between. C^1 across the joins.
  static ScalarField smooth_step_x(double x0, double x1, double lo, double hi) {
    if (!(x1 > x0)) throw ConfigError("smooth_step_x requires x1 > x0");
    ScalarField f([=](Point p) {
      double t = (p.x - x0) / (x1 - x0);
      t = std::clamp(t, 0.0, 1.0);
      double s = t * t * (3 - 2 * t);
      return lo + (hi - lo) * s;
    });
    f.lo_ = std::min(lo, hi);
    f.hi_ = std::max(lo, hi);
    return f;
  }

  static ScalarField from_expression(const std::string& src) {
    Expr e = Expr::parse(src);
    return ScalarField([e](Point p) { return e.eval(p.x, p.y); }, e);
  }

  double operator()(Point p) const { return fn_(p); }
  const std::optional<Expr>& symbolic() const { return sym_; }
  std::optional<double> lower_bound() const { return lo_; }
  std::optional<double> upper_bound() const { return hi_; }
  ScalarField& with_bounds(double lo, double hi) {
    lo_ = lo;
    hi_ = hi;
    return *this;
  }

 private:
  std::function<double(Point)> fn_;
  std::optional<Expr> sym_;
  std::optional<double> lo_, hi_;
};

/// One-sided comb profile: the field equals 1 everywhere except on the teeth
/// [2^n, 2^n + n] x R for n = 1..n_max, where it equals -1. Only the first
/// coordinate matters. The teeth thicken linearly while the gaps between
/// them double, so windowed averages of the field tend to 1 while windows
/// seated on a far tooth still see -1 on a set of width n.
inline ScalarField comb_profile(int n_max) {
  if (n_max < 1) throw ConfigError("comb_profile requires n_max >= 1");
  return ScalarField([n_max](Point p) {
    for (int n = 1; n <= n_max; ++n) {
      double lo = std::ldexp(1.0, n);  // 2^n
      if (p.x >= lo && p.x <= lo + n) return -1.0;
      if (p.x < lo) break;  // teeth are ordered
    }
    return 1.0;
  });
}

/// Vector coefficient field (drift, oblique direction).
class VectorField {
 public:
  VectorField() : fn_([](Point) { return Point{}; }) {}
  explicit VectorField(std::function<Point(Point)> fn) : fn_(std::move(fn)) {}

  static VectorField constant(Point v) {
    return VectorField([v](Point) { return v; });
  }

  Point operator()(Point p) const { return fn_(p); }

 private:
  std::function<Point(Point)> fn_;
};

/// Symmetric diffusion matrix field; in one dimension only a11 is used.
class MatrixField {
 public:
  MatrixField() : a11_(ScalarField::constant(1)), a22_(ScalarField::constant(1)) {}
  MatrixField(ScalarField a11, ScalarField a12, ScalarField a22)
      : a11_(std::move(a11)), a12_(std::move(a12)), a22_(std::move(a22)), diagonal_(false) {}
  MatrixField(ScalarField a11, ScalarField a22)
      : a11_(std::move(a11)), a22_(std::move(a22)) {}

  static MatrixField identity() { return MatrixField(); }
  static MatrixField isotropic(double a) {
    return MatrixField(ScalarField::constant(a), ScalarField::constant(a));
  }

  double a11(Point p) const { return a11_(p); }
  double a12(Point p) const { return diagonal_ ? 0.0 : a12_(p); }
  double a22(Point p) const { return a22_(p); }
  const ScalarField& a11_field() const { return a11_; }
  const ScalarField& a22_field() const { return a22_; }
  bool is_diagonal() const { return diagonal_; }

  /// Smallest eigenvalue of the 2x2 (or the sole 1x1 entry); used by the
  /// ellipticity check and by the mesh-Peclet upwinding switch.
  double min_eig(Point p, int dim) const {
    double a = a11_(p);
    if (dim == 1) return a;
    double d = a22_(p), o = a12(p);
    double tr = a + d, det = a * d - o * o;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    return tr / 2 - disc;
  }

  void check_elliptic(Point p, int dim) const {
    if (min_eig(p, dim) <= 0)
      throw EllipticityViolation("diffusion matrix not positive definite at sampled point");
  }

 private:
  ScalarField a11_, a12_, a22_;
  bool diagonal_ = true;
};

}  // namespace obleig
