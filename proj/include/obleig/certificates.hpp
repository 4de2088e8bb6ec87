#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/domain.hpp"
#include "obleig/errors.hpp"
#include "obleig/expr.hpp"
#include "obleig/operators.hpp"

namespace obleig {

/// The eigenvalue-type quantities a certificate or an audit can bound.
enum class Quantity { lambdaB, LambdaB, lambdaB_p, lambdaB_b, lambdaB_pb, muB_b };

inline const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::lambdaB: return "lambda_B";
    case Quantity::LambdaB: return "Lambda_B";
    case Quantity::lambdaB_p: return "lambda_B_p";
    case Quantity::lambdaB_b: return "lambda_B_b";
    case Quantity::lambdaB_pb: return "lambda_B_pb";
    case Quantity::muB_b: return "mu_B_b";
  }
  return "?";
}

/// An analytic function offered as evidence: a supersolution certificate
/// claims (L + lambda) phi <= 0 inside and B phi >= 0 on the boundary; a
/// subsolution certificate claims the reversed inequalities. The class
/// flags describe phi itself and decide which quantities the certificate
/// bounds once it validates.
struct Certificate {
  enum class Sense { super, sub };

  Expr phi = Expr::constant(1);
  double lambda = 0;
  Sense sense = Sense::super;
  bool claims_positive = true;
  bool claims_inf_positive = false;
  double inf_margin = 0;  // declared lower bound on phi when inf-positive
  bool claims_bounded = false;
  double sup_bound = 0;  // declared upper bound on phi when bounded
  double tol = 1e-9;     // slack allowed in the sampled inequalities
};

struct ImpliedBound {
  Quantity quantity;
  bool is_lower;  // lower bound on the quantity (upper when false)
  double value;
};

struct CertificateReport {
  bool valid = false;
  double worst_interior = 0;  // most violating value of (L + lambda) phi
  double worst_boundary = 0;  // most violating value of B phi
  double min_phi = 0, max_phi = 0;
  int interior_samples = 0, boundary_samples = 0;
  std::vector<ImpliedBound> implied;
};

namespace detail {

/// Second-derivative bundle of phi at a point, symbolic when the
/// expression differentiates, fourth-order finite differences otherwise.
struct PhiJet {
  double f, fx, fy, fxx, fxy, fyy;
};

class PhiEvaluator {
 public:
  PhiEvaluator(const Expr& phi, int dim) : phi_(phi), dim_(dim) {
    try {
      Expr dx = phi.derivative(0);
      Expr dxx = dx.derivative(0);
      if (dim == 2) {
        Expr dy = phi.derivative(1);
        sym_ = Jet{dx, dy, dxx, dx.derivative(1), dy.derivative(1)};
      } else {
        Expr zero = Expr::constant(0);
        sym_ = Jet{dx, zero, dxx, zero, zero};
      }
    } catch (const UndifferentiableField&) {
      // fall through to finite differences
    }
  }

  PhiJet at(Point p) const {
    PhiJet j{};
    j.f = phi_.eval(p.x, p.y);
    if (sym_) {
      j.fx = sym_->dx.eval(p.x, p.y);
      j.fxx = sym_->dxx.eval(p.x, p.y);
      if (dim_ == 2) {
        j.fy = sym_->dy.eval(p.x, p.y);
        j.fxy = sym_->dxy.eval(p.x, p.y);
        j.fyy = sym_->dyy.eval(p.x, p.y);
      }
      return j;
    }
    const double h = kFdStep;
    auto f = [&](double x, double y) { return phi_.eval(x, y); };
    auto d1 = [&](auto&& g, double t) {
      return (-g(t + 2 * h) + 8 * g(t + h) - 8 * g(t - h) + g(t - 2 * h)) / (12 * h);
    };
    auto d2 = [&](auto&& g, double t) {
      return (-g(t + 2 * h) + 16 * g(t + h) - 30 * g(t) + 16 * g(t - h) - g(t - 2 * h)) /
             (12 * h * h);
    };
    j.fx = d1([&](double t) { return f(t, p.y); }, p.x);
    j.fxx = d2([&](double t) { return f(t, p.y); }, p.x);
    if (dim_ == 2) {
      j.fy = d1([&](double t) { return f(p.x, t); }, p.y);
      j.fyy = d2([&](double t) { return f(p.x, t); }, p.y);
      j.fxy = d1([&](double t) { return d1([&](double s) { return f(s, t); }, p.x); }, p.y);
    }
    return j;
  }

 private:
  static constexpr double kFdStep = 1e-3;
  struct Jet {
    Expr dx, dy, dxx, dxy, dyy;
  };
  Expr phi_;
  int dim_;
  std::optional<Jet> sym_;
};

inline void require_certifiable(const EllipticOperator& L) {
  if (L.form != EllipticOperator::Form::selfadjoint_divergence) return;
  auto constant = [](const ScalarField& f) {
    return f.lower_bound() && f.upper_bound() && *f.lower_bound() == *f.upper_bound();
  };
  // div(A grad phi) only matches tr(A D^2 phi) for constant A, which is the
  // only divergence-form case the pointwise checker evaluates exactly
  if (!constant(L.A.a11_field()) || !constant(L.A.a22_field()))
    throw MismatchedScenario("certificate checking needs constant diffusion in divergence form");
}

}  // namespace detail

/// Verify a certificate by dense sampling on the window around `centre` of
/// radius `radius`: interior lattice points at spacing sample_h and
/// boundary points from ray casting. The whole check reruns at half the
/// spacing; a verdict that flips under refinement raises SampleTooCoarse
/// instead of reporting either answer.
inline CertificateReport check_certificate(const Domain& dom, const EllipticOperator& L,
                                           const ObliqueBoundary& B, const Certificate& cert,
                                           Point centre, double radius, double sample_h) {
  if (!(radius > 0) || !(sample_h > 0)) throw ConfigError("certificate window is degenerate");
  detail::require_certifiable(L);
  detail::PhiEvaluator phi(cert.phi, dom.dim());

  auto run = [&](double hs) {
    CertificateReport rep;
    bool super = cert.sense == Certificate::Sense::super;
    double worst_in = -std::numeric_limits<double>::infinity();
    double worst_bd = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    auto visit_phi = [&](double v) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    };
    auto interior_at = [&](Point p) {
      detail::PhiJet j = phi.at(p);
      visit_phi(j.f);
      double lphi = L.A.a11(p) * j.fxx + L.c(p) * j.f;
      if (dom.dim() == 2) lphi += 2 * L.A.a12(p) * j.fxy + L.A.a22(p) * j.fyy;
      Point b = L.b(p);
      lphi += b.x * j.fx + (dom.dim() == 2 ? b.y * j.fy : 0.0);
      double slack = lphi + cert.lambda * j.f;  // want <= 0 for super
      worst_in = std::max(worst_in, super ? slack : -slack);
      ++rep.interior_samples;
    };
    auto nx = static_cast<long>(std::floor(radius / hs));
    for (long i = -nx; i <= nx; ++i) {
      if (dom.dim() == 1) {
        Point p{centre.x + i * hs, 0};
        if (dom.sdf(p) > 0 && std::abs(p.x - centre.x) <= radius) interior_at(p);
        continue;
      }
      for (long jj = -nx; jj <= nx; ++jj) {
        Point p{centre.x + i * hs, centre.y + jj * hs};
        if (dom.sdf(p) > 0 && dist(p, centre) <= radius) interior_at(p);
      }
    }
    if (rep.interior_samples == 0)
      throw EmptyTruncation("certificate window contains no interior samples");
    for (Point x : dom.sample_boundary(centre, radius)) {
      detail::PhiJet j = phi.at(x);
      visit_phi(j.f);
      double bphi;
      if (B.kind == ObliqueBoundary::Kind::dirichlet) {
        // Dirichlet data has no derivative condition: the boundary sign of
        // phi itself plays the role of B phi
        bphi = j.f;
      } else {
        Point nu = dom.outward_normal(x);
        Point beta = B.beta(x, nu, L.A, dom.dim());
        bphi = beta.x * j.fx + (dom.dim() == 2 ? beta.y * j.fy : 0.0) + B.gamma(x) * j.f;
      }
      // super wants B phi >= 0; flip so positive always means violation
      worst_bd = std::max(worst_bd, super ? -bphi : bphi);
      ++rep.boundary_samples;
    }
    rep.worst_interior = super ? worst_in : -worst_in;
    rep.worst_boundary = rep.boundary_samples ? (super ? -worst_bd : worst_bd) : 0;
    rep.min_phi = mn;
    rep.max_phi = mx;
    bool ok = worst_in <= cert.tol && (rep.boundary_samples == 0 || worst_bd <= cert.tol);
    if (cert.claims_positive && !(mn > 0)) ok = false;
    if (cert.claims_inf_positive && !(mn >= cert.inf_margin && cert.inf_margin > 0)) ok = false;
    if (cert.claims_bounded && !(mx <= cert.sup_bound)) ok = false;
    rep.valid = ok;
    return rep;
  };

  CertificateReport coarse = run(sample_h);
  CertificateReport fine = run(sample_h / 2);
  if (coarse.valid != fine.valid)
    throw SampleTooCoarse("certificate verdict changed under sample refinement");
  if (fine.valid) {
    if (cert.sense == Certificate::Sense::super) {
      if (cert.claims_positive)
        fine.implied.push_back({Quantity::lambdaB, true, cert.lambda});
      if (cert.claims_inf_positive)
        fine.implied.push_back({Quantity::lambdaB_p, true, cert.lambda});
      if (cert.claims_bounded && cert.claims_positive)
        fine.implied.push_back({Quantity::lambdaB_b, true, cert.lambda});
      if (cert.claims_inf_positive && cert.claims_bounded)
        fine.implied.push_back({Quantity::lambdaB_pb, true, cert.lambda});
    } else if (cert.claims_positive && cert.claims_bounded) {
      fine.implied.push_back({Quantity::muB_b, false, cert.lambda});
    }
  }
  return fine;
}

}  // namespace obleig
