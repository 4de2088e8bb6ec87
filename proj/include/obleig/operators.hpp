#pragma once

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"
#include "obleig/fields.hpp"
#include "obleig/grid.hpp"

namespace obleig {

/// Second-order elliptic operator L u = tr(A D^2 u) + b . grad u + c u
/// (nondivergence form), or L u = div(A grad u) + c u with diagonal A
/// (self-adjoint divergence form; the drift must be zero there).
struct EllipticOperator {
  enum class Form { nondivergence, selfadjoint_divergence };

  Form form = Form::nondivergence;
  MatrixField A = MatrixField::identity();
  VectorField b;
  ScalarField c = ScalarField::constant(0);

  static EllipticOperator laplacian_plus(ScalarField c0) {
    EllipticOperator L;
    L.c = std::move(c0);
    return L;
  }
  static EllipticOperator selfadjoint(MatrixField A0, ScalarField c0) {
    EllipticOperator L;
    L.form = Form::selfadjoint_divergence;
    L.A = std::move(A0);
    L.c = std::move(c0);
    return L;
  }
};

/// Boundary condition on the domain boundary: oblique B u = beta . grad u
/// + gamma u (beta must point outward: beta . nu > 0), or plain Dirichlet.
/// The truncation sphere always carries homogeneous Dirichlet data.
struct ObliqueBoundary {
  enum class Kind { oblique, dirichlet };
  enum class BetaMode { normal, conormal, custom };

  Kind kind = Kind::oblique;
  BetaMode beta_mode = BetaMode::normal;
  VectorField beta_custom;
  ScalarField gamma = ScalarField::constant(0);

  static ObliqueBoundary neumann() { return ObliqueBoundary{}; }
  static ObliqueBoundary robin(double g) {
    ObliqueBoundary b;
    b.gamma = ScalarField::constant(g);
    return b;
  }
  static ObliqueBoundary dirichlet() {
    ObliqueBoundary b;
    b.kind = Kind::dirichlet;
    return b;
  }

  Point beta(Point anchor, Point nu, const MatrixField& A, int dim) const {
    switch (beta_mode) {
      case BetaMode::normal: return nu;
      case BetaMode::conormal: {
        if (dim == 1) return {A.a11(anchor) * nu.x, 0};
        return {A.a11(anchor) * nu.x + A.a12(anchor) * nu.y,
                A.a12(anchor) * nu.x + A.a22(anchor) * nu.y};
      }
      case BetaMode::custom: return beta_custom(anchor);
    }
    return nu;
  }
};

/// Order of the one-sided difference used for the oblique derivative in
/// boundary rows. Second order is the default; the first-order variant
/// keeps the semi-implicit time stepper inside the monotone class.
enum class ObliqueOrder { second, first };

/// Coupling a row would have had to a truncation-cap value, eliminated as
/// zero in the pencil. The full discrete operator row is (M u)_i + m u(at);
/// solvers that pin nonzero data on the cap add m times that data back.
struct CapLink {
  int sys = -1;
  Point at;
  double m = 0.0;
};

/// Discrete pencil M v = lambda W v for the truncated mixed problem, with
/// M = -(discrete L) plus boundary-condition rows and W = diag(w). For the
/// collocation path w is 1 on interior rows and 0 on boundary rows; for
/// the finite-volume path w is the lumped cell measure everywhere.
struct DiscreteSystem {
  std::shared_ptr<const TruncatedGrid> grid;
  Eigen::SparseMatrix<double> M;
  Eigen::VectorXd w;
  bool symmetric = false;
  double scale = 1.0;         // inf-norm of M, used to scale residual tests
  std::vector<int> sys_of_node;  // -1 for nodes without a row
  std::vector<int> node_of_sys;
  std::vector<CapLink> cap_links;

  int n() const { return static_cast<int>(node_of_sys.size()); }
};

namespace detail {

inline void add_entry(std::vector<Eigen::Triplet<double>>& t, int r, int c, double v) {
  if (v != 0) t.emplace_back(r, c, v);
}

struct Arm {
  double theta = 1.0;  // fraction of h to the usable value
  int sys = -1;        // unknown on the far end, or -1 when the value is zero
  bool cap = false;    // far end sits on the truncation sphere
};

}  // namespace detail

/// Assemble the discrete pencil for the truncated eigenproblem on a grid.
/// Nondivergence operators are collocated with shortened-arm differences at
/// the truncation sphere; oblique rows are collocated at the boundary
/// anchors through multilinear interpolation. Self-adjoint operators take
/// the flux (finite-volume) path with lumped boundary half-cells, which
/// keeps the pencil exactly symmetric.
inline DiscreteSystem assemble(std::shared_ptr<const TruncatedGrid> grid_ptr,
                               const EllipticOperator& L, const ObliqueBoundary& B,
                               ObliqueOrder order = ObliqueOrder::second) {
  const TruncatedGrid& g = *grid_ptr;
  const int dim = g.dim();
  const double h = g.h();
  const bool oblique_carries = B.kind == ObliqueBoundary::Kind::oblique && !g.domain().boundaryless();

  DiscreteSystem sys;
  sys.grid = grid_ptr;
  sys.sys_of_node.assign(g.size(), -1);
  for (int i = 0; i < g.size(); ++i) {
    const GridNode& n = g.node(i);
    bool carries = n.role == NodeRole::interior || (n.role == NodeRole::oblique && oblique_carries);
    if (carries) {
      sys.sys_of_node[i] = static_cast<int>(sys.node_of_sys.size());
      sys.node_of_sys.push_back(i);
    }
  }
  const int N = sys.n();
  std::vector<Eigen::Triplet<double>> trip;
  sys.w = Eigen::VectorXd::Zero(N);

  // Arm towards a neighbour: unknown at distance h, or a zero value at a
  // shortened distance theta h (truncation sphere or eliminated wall).
  auto arm = [&](int idx, int axis, int dir) -> detail::Arm {
    int nb = g.neighbor(idx, axis, dir);
    if (nb < 0) return {1.0, -1, false};  // unreachable side of an oblique node
    const GridNode& n = g.node(nb);
    if (n.role == NodeRole::cap) return {g.cap_arm_fraction(idx, axis, dir), -1, true};
    int s = sys.sys_of_node[nb];
    if (s >= 0) return {1.0, s, false};
    return {g.wall_arm_fraction(idx, nb), -1, false};  // Dirichlet wall elimination
  };

  // Point at fraction theta of the arm from a node along an axis.
  auto arm_point = [&](int idx, int axis, int dir, double theta) {
    Point p = g.node(idx).pos;
    (axis == 0 ? p.x : p.y) += dir * theta * h;
    return p;
  };
  auto link = [&](int si, Point at, double m) {
    if (m != 0) sys.cap_links.push_back({si, at, m});
  };

  if (L.form == EllipticOperator::Form::selfadjoint_divergence) {
    if (!L.A.is_diagonal())
      throw MismatchedScenario("divergence-form assembly needs a diagonal diffusion matrix");
    sys.symmetric = true;
    for (int si = 0; si < N; ++si) {
      const GridNode& n = g.node(sys.node_of_sys[si]);
      double frac = std::clamp(0.5 + n.sdf / h, 0.05, 1.0);
      if (n.role == NodeRole::interior) frac = 1.0;
      sys.w[si] = std::pow(h, dim) * frac;
    }
    for (int si = 0; si < N; ++si) {
      int idx = sys.node_of_sys[si];
      const GridNode& n = g.node(idx);
      for (int axis = 0; axis < dim; ++axis) {
        for (int dir = -1; dir <= 1; dir += 2) {
          int nb = g.neighbor(idx, axis, dir);
          if (nb < 0) continue;  // no flux across the outer rim of the band
          Point mid = n.pos;
          (axis == 0 ? mid.x : mid.y) += 0.5 * dir * h;
          double akk = axis == 0 ? L.A.a11(mid) : L.A.a22(mid);
          if (akk <= 0) throw EllipticityViolation("nonpositive diffusion on a flux face");
          double t = akk * std::pow(h, dim - 2);
          int sj = sys.sys_of_node[nb];
          if (sj >= 0) {
            if (dir < 0) continue;  // each carrier face is added once, from its low side
            detail::add_entry(trip, si, si, t);
            detail::add_entry(trip, sj, sj, t);
            detail::add_entry(trip, si, sj, -t);
            detail::add_entry(trip, sj, si, -t);
          } else if (g.node(nb).role == NodeRole::cap) {
            double theta = g.cap_arm_fraction(idx, axis, dir);
            detail::add_entry(trip, si, si, t / theta);
            link(si, arm_point(idx, axis, dir, theta), -t / theta);
          } else {
            detail::add_entry(trip, si, si, t / g.wall_arm_fraction(idx, nb));
          }
        }
      }
      if (n.role == NodeRole::oblique) {
        double gam = B.gamma(n.anchor);
        detail::add_entry(trip, si, si, gam * std::pow(h, dim - 1));
      }
      L.A.check_elliptic(n.pos, dim);
      detail::add_entry(trip, si, si, -L.c(n.pos) * sys.w[si]);
    }
  } else {
    // Collocation path.
    for (int si = 0; si < N; ++si) {
      int idx = sys.node_of_sys[si];
      const GridNode& n = g.node(idx);
      if (n.role != NodeRole::interior) continue;
      sys.w[si] = 1.0;
      L.A.check_elliptic(n.pos, dim);
      double under = L.A.min_eig(n.pos, dim);
      Point bvec = L.b(n.pos);
      for (int axis = 0; axis < dim; ++axis) {
        detail::Arm lo = arm(idx, axis, -1), hi = arm(idx, axis, +1);
        double tm = lo.theta, tp = hi.theta;
        double akk = axis == 0 ? L.A.a11(n.pos) : L.A.a22(n.pos);
        auto couple = [&](const detail::Arm& a, int dir, double coeff) {
          if (a.sys >= 0) detail::add_entry(trip, si, a.sys, coeff);
          else if (a.cap) link(si, arm_point(idx, axis, dir, a.theta), coeff);
        };
        // shortened-arm second difference, exact for quadratics
        detail::add_entry(trip, si, si, 2 * akk / (h * h * tm * tp));
        couple(lo, -1, -2 * akk / (h * h * tm * (tm + tp)));
        couple(hi, +1, -2 * akk / (h * h * tp * (tm + tp)));
        double bk = axis == 0 ? bvec.x : bvec.y;
        if (bk == 0) continue;
        if (std::abs(bk) * h / under > 2.0) {
          // mesh-Peclet guard: difference towards the drift direction
          int dir = bk > 0 ? +1 : -1;
          const detail::Arm& up = bk > 0 ? hi : lo;
          detail::add_entry(trip, si, si, std::abs(bk) / (up.theta * h));
          couple(up, dir, -std::abs(bk) / (up.theta * h));
        } else {
          // nonuniform central first difference
          detail::add_entry(trip, si, si, -bk * (tp - tm) / (h * tm * tp));
          couple(lo, -1, bk * tp / (h * tm * (tm + tp)));
          couple(hi, +1, -bk * tm / (h * tp * (tm + tp)));
        }
      }
      if (dim == 2) {
        double a12 = L.A.a12(n.pos);
        if (a12 != 0) {
          for (int di = -1; di <= 1; di += 2) {
            for (int dj = -1; dj <= 1; dj += 2) {
              int c = g.find(n.ix + di, n.iy + dj);
              int sc = c >= 0 ? sys.sys_of_node[c] : -1;
              double coeff = -a12 * di * dj / (2 * h * h);
              if (sc >= 0) detail::add_entry(trip, si, sc, coeff);
              else if (c >= 0 && g.node(c).role == NodeRole::cap) link(si, g.node(c).pos, coeff);
              // wall corners carry a genuine zero
            }
          }
        }
      }
      detail::add_entry(trip, si, si, -L.c(n.pos));
    }
    // Oblique boundary rows, collocated at the anchors.
    for (int si = 0; si < N; ++si) {
      int idx = sys.node_of_sys[si];
      const GridNode& n = g.node(idx);
      if (n.role != NodeRole::oblique) continue;
      Point a = n.anchor, nu = n.normal;
      Point beta = B.beta(a, nu, L.A, dim);
      double bn = norm(beta);
      if (!(bn > 0) || dot(beta, nu) <= 1e-10 * bn)
        throw ObliquenessViolation("oblique direction does not point outward at an anchor");
      Point mhat = beta * (1.0 / bn);
      double gam = B.gamma(a);
      std::map<int, double> row;
      auto add_interp = [&](Point q, double coeff) {
        if (coeff == 0) return;
        std::vector<InterpTerm> cap_terms;
        for (const auto& t : g.interpolate(q, nullptr, &cap_terms)) {
          int s = sys.sys_of_node[t.node];
          if (s >= 0) row[s] += coeff * t.w;  // carriers only; zero otherwise
        }
        for (const auto& t : cap_terms) link(si, g.node(t.node).pos, coeff * t.w);
      };
      if (order == ObliqueOrder::second) {
        add_interp(a, 3 * bn / (2 * h) + gam);
        add_interp(a - mhat * h, -4 * bn / (2 * h));
        add_interp(a - mhat * (2 * h), bn / (2 * h));
      } else {
        add_interp(a, bn / h + gam);
        add_interp(a - mhat * h, -bn / h);
      }
      for (const auto& [c, v] : row) detail::add_entry(trip, si, c, v);
    }
  }

  sys.M.resize(N, N);
  sys.M.setFromTriplets(trip.begin(), trip.end());
  sys.M.makeCompressed();
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(N);
  for (int k = 0; k < sys.M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.M, k); it; ++it)
      rowsum[it.row()] += std::abs(it.value());
  double sc = N > 0 ? rowsum.maxCoeff() : 1.0;
  sys.scale = sc > 0 ? sc : 1.0;
  return sys;
}

/// Largest interior residual of the assembled operator against a smooth
/// probe with known image: applies M to samples of phi, restores the cap
/// couplings, and compares row i against -(L phi) at the node. Rows close
/// to the truncation sphere are skipped (shortened arms are first order
/// there by design). Used by consistency-rate tests.
template <class Phi, class MinusLPhi>
double consistency_probe(const DiscreteSystem& sys, Phi&& phi, MinusLPhi&& minus_L_phi,
                         double radius_fraction = 0.8) {
  const TruncatedGrid& g = *sys.grid;
  Eigen::VectorXd v(sys.n());
  for (int si = 0; si < sys.n(); ++si) v[si] = phi(g.node(sys.node_of_sys[si]).pos);
  Eigen::VectorXd r = sys.M * v;
  for (const CapLink& cl : sys.cap_links) r[cl.sys] += cl.m * phi(cl.at);
  double worst = 0;
  for (int si = 0; si < sys.n(); ++si) {
    const GridNode& n = g.node(sys.node_of_sys[si]);
    if (n.role != NodeRole::interior) continue;
    if (n.radius > radius_fraction * g.radius()) continue;
    if (!(sys.w[si] > 0)) continue;
    worst = std::max(worst, std::abs(r[si] / sys.w[si] - minus_L_phi(n.pos)));
  }
  return worst;
}

/// Compactly supported boundary-layer profile used by barrier functions:
/// value 1/2 and slope -1 at zero, identically zero past one, C^2 across
/// the join. This particular shape is an implementation choice; any
/// profile with those endpoint values works.
inline double barrier_profile(double t) {
  if (t <= 0) return 0.5;
  if (t >= 1) return 0.0;
  double q = 1 - t * t;
  return 0.5 * q * q * q * std::exp(-2 * t);
}

/// Supersolution barrier 1 + chi(k dist(x, boundary)). Valid once k beats
/// the reciprocal interior-ball radius and the boundary operator sees a
/// strictly positive value on it.
struct Barrier {
  double k = 0;
  double min_boundary_b = 0;
  std::function<double(Point)> value;
};

inline Barrier build_barrier(const Domain& dom, const ObliqueBoundary& B, const MatrixField& A,
                             double k, Point sample_centre, double sample_radius) {
  double rho = dom.interior_ball_radius();
  if (!(rho > 0) || k <= 1.0 / rho)
    throw KTooSmall("barrier steepness must exceed the reciprocal interior-ball radius");
  Barrier bar;
  bar.k = k;
  bar.value = [&dom, k](Point p) {
    return 1.0 + barrier_profile(k * std::max(0.0, dom.sdf(p)));
  };
  double mn = 1e300;
  for (Point x : dom.sample_boundary(sample_centre, sample_radius)) {
    Point nu = dom.outward_normal(x);
    Point beta = B.beta(x, nu, A, dom.dim());
    // d/dt chi at 0 is -1 and grad dist = -nu, so beta.grad of the layer is +k beta.nu
    double bw = B.gamma(x) * (1 + barrier_profile(0)) + k * dot(beta, nu);
    mn = std::min(mn, bw);
  }
  if (mn >= 1e300) mn = B.gamma(sample_centre) * (1 + barrier_profile(0));
  if (!(mn > 0)) throw KTooSmall("boundary operator is not positive on the barrier");
  bar.min_boundary_b = mn;
  return bar;
}

}  // namespace obleig
