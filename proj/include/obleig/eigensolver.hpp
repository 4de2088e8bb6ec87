#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"
#include "obleig/grid.hpp"
#include "obleig/operators.hpp"

namespace obleig {

struct EigResult {
  double lambda = 0;
  Eigen::VectorXd v;  // oriented so the largest entry is +1
  double residual = 0;
  int iterations = 0;
  double positivity_margin = 0;  // smallest entry of v
};

/// Weighted quotient (M v . W v) / (W v . W v); equals the eigenvalue at a
/// converged eigenvector and is the plain Rayleigh quotient when the system
/// is symmetric with W = diag(w) positive.
inline double pencil_quotient(const DiscreteSystem& sys, const Eigen::VectorXd& v) {
  Eigen::VectorXd wv = sys.w.cwiseProduct(v);
  double den = wv.squaredNorm();
  if (den == 0) throw ZeroVector("quotient over a vector with no weighted support");
  return (sys.M * v).dot(wv) / den;
}

/// Rayleigh quotient v'Mv / v'Wv for symmetric pencils. Bounded below by
/// the principal eigenvalue and equal to it at the eigenvector.
inline double pencil_form_quotient(const DiscreteSystem& sys, const Eigen::VectorXd& v) {
  double den = v.dot(sys.w.cwiseProduct(v));
  if (den == 0) throw ZeroVector("Rayleigh quotient over a massless vector");
  return v.dot(sys.M * v) / den;
}

/// Variational quotient of a nodal field: the energy
/// (grad v . A grad v - c v^2) integrated over the truncation plus the
/// gamma-weighted boundary term, over the mass of v^2. Evaluated directly
/// from the grid and the coefficient fields with face-midpoint differences,
/// so it reproduces the quadratic form of the symmetric pencil identically;
/// tests lean on that identity. Faces cut by the truncation sphere or by an
/// eliminated Dirichlet wall contribute their shortened-arm energy.
inline double rayleigh_quotient(const DiscreteSystem& sys, const EllipticOperator& L,
                                const ObliqueBoundary& B, const Eigen::VectorXd& v) {
  if (!sys.symmetric)
    throw MismatchedScenario("variational quotient needs the self-adjoint (flux) assembly");
  const TruncatedGrid& g = *sys.grid;
  const int dim = g.dim();
  const double h = g.h();
  double num = 0, den = 0;
  for (int si = 0; si < sys.n(); ++si) {
    int idx = sys.node_of_sys[si];
    const GridNode& n = g.node(idx);
    for (int axis = 0; axis < dim; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        int nb = g.neighbor(idx, axis, dir);
        if (nb < 0) continue;
        Point mid = n.pos;
        (axis == 0 ? mid.x : mid.y) += 0.5 * dir * h;
        double t = (axis == 0 ? L.A.a11(mid) : L.A.a22(mid)) * std::pow(h, dim - 2);
        int sj = sys.sys_of_node[nb];
        if (sj >= 0) {
          if (dir < 0) continue;  // each carrier face counted once
          double dv = v[sj] - v[si];
          num += t * dv * dv;
        } else {
          double theta = g.node(nb).role == NodeRole::cap ? g.cap_arm_fraction(idx, axis, dir)
                                                          : g.wall_arm_fraction(idx, nb);
          num += t / theta * v[si] * v[si];  // value zero past the face
        }
      }
    }
    if (n.role == NodeRole::oblique && B.kind == ObliqueBoundary::Kind::oblique)
      num += B.gamma(n.anchor) * std::pow(h, dim - 1) * v[si] * v[si];
    num -= L.c(n.pos) * sys.w[si] * v[si] * v[si];
    den += sys.w[si] * v[si] * v[si];
  }
  if (den == 0) throw ZeroVector("variational quotient over a massless field");
  return num / den;
}

/// Principal eigenpair of M v = lambda W v by shifted inverse iteration,
/// starting below the spectrum (weighted Gershgorin minus a margin) and
/// pulling the shift up towards the current estimate every few steps. The
/// principal eigenvalue of these pencils is the one with least real part
/// and carries the positive eigenvector, which the margin check verifies.
inline EigResult principal_eigenpair(const DiscreteSystem& sys, double tol = 1e-9,
                                     int max_iter = 200) {
  const int n = sys.n();
  if (n == 0) throw EmptyTruncation("eigenproblem over an empty system");

  double gersh = std::numeric_limits<double>::infinity();
  {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), offsum = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < sys.M.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.M, k); it; ++it) {
        if (it.row() == it.col()) diag[it.row()] += it.value();
        else offsum[it.row()] += std::abs(it.value());
      }
    for (int i = 0; i < n; ++i)
      if (sys.w[i] > 0) gersh = std::min(gersh, (diag[i] - offsum[i]) / sys.w[i]);
    if (!std::isfinite(gersh)) gersh = 0;
  }

  double sigma = gersh - 0.1 * (1 + std::abs(gersh));
  Eigen::SparseMatrix<double> A;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  auto factor = [&](double s) {
    A = sys.M;
    // subtract s W on the diagonal
    for (int k = 0; k < A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
        if (it.row() == it.col()) it.valueRef() -= s * sys.w[it.row()];
    lu.compute(A);
    return lu.info() == Eigen::Success;
  };
  // Diagonal entries must exist for the in-place shift; assembly always
  // writes them, but guard against a pathological all-zero diagonal row.
  for (int tries = 0; tries < 5 && !factor(sigma); ++tries)
    sigma -= 1 + std::abs(sigma);
  if (lu.info() != Eigen::Success)
    throw ResolventSingular("could not factor the shifted pencil below the spectrum");

  const double wmax = sys.w.size() ? sys.w.maxCoeff() : 1.0;
  const double safe_lo = sigma;
  const int iter_cap = 50 * max_iter;
  int used = 0;

  struct Phase {
    double lambda, resid, margin;
    Eigen::VectorXd v;
  };

  // One run of shifted inverse iteration from a fresh positive seed. Any
  // shift above the principal eigenvalue makes the iteration land on a
  // higher mode, and with clustered low modes the quotient of an
  // unconverged iterate can sit above that eigenvalue, so pull-ups are
  // provisional and never exceed `cap`. A converged vector that fails the
  // positivity check certifies its eigenvalue as an overshoot ceiling; the
  // shift restarts at the midpoint of [certified floor, ceiling] and later
  // pull-ups bisect into the spectral gap.
  auto phase = [&](double cap) -> Phase {
    sigma = safe_lo;
    for (int tries = 0; tries < 5 && !factor(sigma); ++tries) sigma -= 1 + std::abs(sigma);
    if (lu.info() != Eigen::Success)
      throw ResolventSingular("could not factor the shifted pencil below the spectrum");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    double lambda = 0, resid = std::numeric_limits<double>::infinity();
    double ceiling = std::numeric_limits<double>::infinity();
    while (++used <= iter_cap) {
      Eigen::VectorXd x = lu.solve(sys.w.cwiseProduct(v));
      if (!x.allFinite()) throw ResolventSingular("inverse iteration produced a non-finite step");
      int imax = 0;
      x.cwiseAbs().maxCoeff(&imax);
      if (x[imax] == 0) throw ZeroVector("inverse iteration collapsed to zero");
      v = x / x[imax];
      lambda = pencil_quotient(sys, v);
      resid = (sys.M * v - lambda * sys.w.cwiseProduct(v)).cwiseAbs().maxCoeff();
      if (resid <= tol * (sys.scale + std::abs(lambda) * wmax)) {
        // Entries below ~1e-7 of the peak of a strongly localised
        // eigenvector are solver noise of either sign; a genuinely wrong
        // mode is negative at O(1) of the max-normalised vector.
        double margin = v.minCoeff();
        if (margin >= -1e-5) return {lambda, resid, margin, v};
        ceiling = std::min(ceiling, lambda);
        sigma = std::min(0.5 * (safe_lo + ceiling), cap);
        for (int tries = 0; tries < 5 && !factor(sigma); ++tries)
          sigma -= 0.1 * (ceiling - safe_lo) + 1e-12;
        if (lu.info() != Eigen::Success)
          throw ResolventSingular("could not refactor after a positivity restart");
        v.setOnes();
        continue;
      }
      if (used % 5 == 0) {
        // pull the shift up, staying strictly below the current estimate
        double snew = lambda - 1e-6 * (1 + std::abs(lambda));
        if (std::isfinite(ceiling)) snew = std::min(snew, 0.5 * (sigma + ceiling));
        snew = std::min(snew, cap);
        if (snew > sigma && !factor(snew)) {
          factor(sigma);  // singular guard: keep the previous working shift
        } else if (snew > sigma) {
          sigma = snew;
        }
      }
    }
    throw NoConvergence("inverse iteration did not meet the residual tolerance");
  };

  // The positivity check cannot see a wrong mode whose wells are disjoint
  // from the principal one: its sign change hides below the noise floor.
  // So every accepted value is confirmed from the certified floor with
  // pull-ups capped strictly below it; the confirm run either reproduces
  // the value or hands back a lower mode, which is then confirmed in turn.
  Phase best = phase(std::numeric_limits<double>::infinity());
  for (int round = 0;; ++round) {
    if (round == 8) throw NoConvergence("principal confirmation did not stabilise");
    double gap = 1e-6 * (1 + std::abs(best.lambda));
    Phase confirm = phase(best.lambda - 0.05 * (1 + std::abs(best.lambda)));
    if (confirm.lambda >= best.lambda - gap) break;
    best = confirm;
  }

  EigResult res;
  res.lambda = best.lambda;
  res.v = best.v;
  res.residual = best.resid;
  res.iterations = used;
  res.positivity_margin = best.margin;
  return res;
}

/// Least-squares fit lambda(r) = c0 + c1 / r^2 over the last (up to) three
/// samples; returns {c0, c1}. With one sample c0 is that value.
inline std::array<double, 2> fit_inverse_square(const std::vector<double>& radii,
                                                const std::vector<double>& lambdas) {
  size_t m = radii.size();
  if (m == 0 || m != lambdas.size()) throw ConfigError("extrapolation needs matching samples");
  size_t k = std::min<size_t>(3, m);
  double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
  for (size_t i = m - k; i < m; ++i) {
    double x = 1.0 / (radii[i] * radii[i]);
    s00 += 1;
    s01 += x;
    s11 += x * x;
    b0 += lambdas[i];
    b1 += lambdas[i] * x;
  }
  double det = s00 * s11 - s01 * s01;
  if (k == 1 || std::abs(det) < 1e-30) return {b0 / s00, 0.0};
  return {(s11 * b0 - s01 * b1) / det, (s00 * b1 - s01 * b0) / det};
}

struct SweepPoint {
  Point y;
  double r = 0, h = 0;
  double lambda = 0;
  double residual = 0;
  int iterations = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double extrapolated = 0;  // c0 of the 1/r^2 fit over the last three radii
  double fit_coeff = 0;     // c1 of that fit
};

/// Eigenvalues of the truncated problem at one centre over a radius
/// schedule, with the 1/r^2 tail fit. The per-radius values decrease
/// towards the untruncated eigenvalue; the fit removes the leading cap
/// effect.
inline SweepResult truncation_sweep(const Domain& dom, const EllipticOperator& L,
                                    const ObliqueBoundary& B, Point y,
                                    const std::vector<double>& radii, double h,
                                    ObliqueOrder order = ObliqueOrder::second,
                                    double tol = 1e-9) {
  if (radii.empty()) throw ConfigError("sweep needs at least one radius");
  SweepResult out;
  std::vector<double> rs, ls;
  for (double r : radii) {
    auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, r, h));
    DiscreteSystem sys = assemble(grid, L, B, order);
    EigResult e = principal_eigenpair(sys, tol);
    out.points.push_back({y, r, h, e.lambda, e.residual, e.iterations});
    rs.push_back(r);
    ls.push_back(e.lambda);
  }
  auto fit = fit_inverse_square(rs, ls);
  out.extrapolated = fit[0];
  out.fit_coeff = fit[1];
  return out;
}

struct GlobalSweepResult {
  std::vector<double> radii;
  std::vector<Point> centres;
  std::vector<std::vector<double>> lambda;  // [radius][centre], NaN where seeding failed
  std::vector<double> sup_lambda;           // per radius, over the valid centres
  double estimate = 0;                      // 1/r^2 extrapolation of the sup curve
};

/// Sup over centres of the truncated eigenvalue, per radius. Centres whose
/// truncation cannot be seeded (outside the domain) are skipped. The sup
/// curve decreases in r; its tail fit estimates the large-r limit.
inline GlobalSweepResult lambda_global_sweep(const Domain& dom, const EllipticOperator& L,
                                             const ObliqueBoundary& B,
                                             const std::vector<Point>& centres,
                                             const std::vector<double>& radii, double h,
                                             ObliqueOrder order = ObliqueOrder::second,
                                             double tol = 1e-9) {
  if (centres.empty() || radii.empty()) throw ConfigError("global sweep needs centres and radii");
  GlobalSweepResult out;
  out.radii = radii;
  out.centres = centres;
  for (double r : radii) {
    std::vector<double> row;
    double sup = -std::numeric_limits<double>::infinity();
    for (Point y : centres) {
      double val = std::numeric_limits<double>::quiet_NaN();
      try {
        auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, r, h));
        DiscreteSystem sys = assemble(grid, L, B, order);
        val = principal_eigenpair(sys, tol).lambda;
        sup = std::max(sup, val);
      } catch (const SeedOutsideDomain&) {
      }
      row.push_back(val);
    }
    if (!std::isfinite(sup)) throw SeedOutsideDomain("no centre of the sweep seeds a truncation");
    out.lambda.push_back(std::move(row));
    out.sup_lambda.push_back(sup);
  }
  auto fit = fit_inverse_square(out.radii, out.sup_lambda);
  out.estimate = fit[0];
  return out;
}

struct BelowLambdaResult {
  std::shared_ptr<const TruncatedGrid> grid;  // grid of the final radius
  Eigen::VectorXd u;                          // positive solution, value 1 at the centre
  std::vector<int> sys_of_node;               // row of each node of that grid, -1 for caps
  std::vector<double> window_diffs;           // successive sup differences on the window
  double min_on_window = 0;
  double residual = 0;  // sup residual of the final linear solve, relative to the scale
};

/// For lambda strictly below the principal eigenvalue, solve
/// (M - lambda W) u = W g_n over an increasing radius schedule, where g_n
/// is a bump supported in the shell between consecutive truncation radii.
/// Normalized to value one at the centre, the solutions are positive (the
/// resolvent below the spectrum preserves sign) and settle on any fixed
/// window; outside the shells they satisfy the homogeneous equation, so
/// the construction exhibits a positive eigenfunction candidate at the
/// prescribed level. Levels at or above the spectrum surface as
/// ResolventSingular or PositivityLoss.
inline BelowLambdaResult eigenfunction_below_lambda(const Domain& dom, const EllipticOperator& L,
                                                    const ObliqueBoundary& B, Point y,
                                                    double lambda,
                                                    const std::vector<double>& radii, double h,
                                                    double window, double window_tol,
                                                    ObliqueOrder order = ObliqueOrder::second) {
  if (radii.size() < 2) throw ConfigError("resolvent construction needs at least two radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ConfigError("radius schedule must increase");
  if (!(window < radii.front()))
    throw ConfigError("settle window must sit inside the smallest radius");

  BelowLambdaResult out;
  std::shared_ptr<const TruncatedGrid> prev_grid;
  std::vector<int> prev_sys_of_node;
  Eigen::VectorXd prev_u;
  for (size_t k = 1; k < radii.size(); ++k) {
    double inner = radii[k - 1], outer = radii[k];
    auto bump = [&](Point p) {
      double s = (dist(p, y) - inner) / (outer - inner);
      if (s <= 0 || s >= 1) return 0.0;
      double q = 4 * s * (1 - s);
      return q * q * q;
    };
    auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, outer, h));
    DiscreteSystem sys = assemble(grid, L, B, order);
    Eigen::SparseMatrix<double> A = sys.M;
    for (int kk = 0; kk < A.outerSize(); ++kk)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, kk); it; ++it)
        if (it.row() == it.col()) it.valueRef() -= lambda * sys.w[it.row()];
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success)
      throw ResolventSingular("shifted system is singular; the level is not below the spectrum");
    Eigen::VectorXd rhs(sys.n());
    for (int si = 0; si < sys.n(); ++si)
      rhs[si] = sys.w[si] * bump(grid->node(sys.node_of_sys[si]).pos);
    Eigen::VectorXd u = lu.solve(rhs);
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e12)
      throw ResolventSingular("resolvent blow-up; the level is too close to the spectrum");
    out.residual = (A * u - rhs).cwiseAbs().maxCoeff() / sys.scale;
    int centre = grid->find(0, 0);
    double uc = centre >= 0 && sys.sys_of_node[centre] >= 0 ? u[sys.sys_of_node[centre]] : 0.0;
    if (!(uc > 0)) throw PositivityLoss("constructed solution vanishes or flips at the centre");
    u /= uc;
    // interior sign check; boundary rows of the second-order oblique stencil
    // may carry rounding-level overshoot, which is not a sign flip
    for (int si = 0; si < sys.n(); ++si) {
      const GridNode& n = grid->node(sys.node_of_sys[si]);
      double floor = n.role == NodeRole::interior ? 0.0 : -1e-8;
      if (u[si] <= floor)
        throw PositivityLoss("constructed solution is not positive on the truncation");
    }
    if (prev_grid) {
      // settle check on the fixed window, matched node by node
      double diff = 0;
      for (int si = 0; si < sys.n(); ++si) {
        const GridNode& n = grid->node(sys.node_of_sys[si]);
        if (n.radius > window) continue;
        int pidx = prev_grid->find(n.ix, n.iy);
        if (pidx < 0 || prev_sys_of_node[pidx] < 0) continue;
        diff = std::max(diff, std::abs(u[si] - prev_u[prev_sys_of_node[pidx]]));
      }
      out.window_diffs.push_back(diff);
    }
    prev_grid = grid;
    prev_sys_of_node = sys.sys_of_node;
    prev_u = u;
    out.grid = grid;
    out.u = u;
    out.sys_of_node = sys.sys_of_node;
  }
  double mn = std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < out.grid->size(); ++idx) {
    const GridNode& n = out.grid->node(idx);
    if (n.role != NodeRole::interior || n.radius > window) continue;
    mn = std::min(mn, out.u[out.sys_of_node[idx]]);
  }
  out.min_on_window = std::isfinite(mn) ? mn : 0.0;
  if (!out.window_diffs.empty() && out.window_diffs.back() > window_tol)
    throw NoConvergence("window values did not settle over the radius schedule");
  return out;
}

}  // namespace obleig
