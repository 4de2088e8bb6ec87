#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include <obleig/domain.hpp>
#include <obleig/eigensolver.hpp>
#include <obleig/errors.hpp>
#include <obleig/fields.hpp>
#include <obleig/operators.hpp>

using Catch::Approx;
using obleig::Domain;
using obleig::EllipticOperator;
using obleig::MatrixField;
using obleig::ObliqueBoundary;
using obleig::Point;
using obleig::ScalarField;
using obleig::TruncatedGrid;

namespace {

obleig::DiscreteSystem make_system(const Domain& dom, Point y, double r, double h,
                                   const EllipticOperator& L, const ObliqueBoundary& B) {
  auto grid = std::make_shared<const TruncatedGrid>(TruncatedGrid::truncate(dom, y, r, h));
  return obleig::assemble(grid, L, B);
}

}  // namespace

TEST_CASE("interval ground state under absorbing walls") {
  // -u'' = lambda u on (-pi/2, pi/2) with zero walls: lambda_1 = 1.
  Domain seg = Domain::strip(obleig::kPi / 2, 0, 0.0, 1);
  auto sys = make_system(seg, {0, 0}, 3.0, 0.01,
                         EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                         ObliqueBoundary::dirichlet());
  auto eig = obleig::principal_eigenpair(sys);
  CHECK(eig.lambda == Approx(1.0).margin(1e-3));
  CHECK(eig.positivity_margin >= -1e-8);
  CHECK(eig.v.maxCoeff() == Approx(1.0));
  CHECK(obleig::pencil_quotient(sys, eig.v) == Approx(eig.lambda).margin(1e-9 * sys.scale));
}

TEST_CASE("clustered wells resolve to the principal mode") {
  // Potential 1 away from teeth of widths 1..6 placed at 2^n: the widest
  // region of high potential is [-70, 2], so the ground state must live
  // there, a touch above -1. Nearby wells host competing modes around
  // -0.9865 and shallower; landing on any of them is a solver failure.
  auto sys = make_system(Domain::whole_space(1), {0, 0}, 70.0, 0.05,
                         EllipticOperator::laplacian_plus(obleig::comb_profile(6)),
                         ObliqueBoundary::neumann());
  auto eig = obleig::principal_eigenpair(sys);
  CHECK(eig.lambda > -1.0);
  CHECK(eig.lambda < -0.9955);
  CHECK(eig.positivity_margin >= -1e-5);

  int imax = 0;
  eig.v.maxCoeff(&imax);
  double peak_x = sys.grid->node(sys.node_of_sys[imax]).pos.x;
  CHECK(peak_x < 2.5);
  CHECK(peak_x > -70.0);
}

TEST_CASE("random positive fields dominate the principal value") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  EllipticOperator L =
      EllipticOperator::selfadjoint(MatrixField::isotropic(1.0), ScalarField::constant(1.0));
  ObliqueBoundary B = ObliqueBoundary::robin(1.0);
  auto sys = make_system(strip, {0, 0}, 6.0, 0.1, L, B);
  REQUIRE(sys.symmetric);
  auto eig = obleig::principal_eigenpair(sys);
  CHECK(eig.lambda == Approx(-0.2598).margin(0.05));

  // The nodal energy quotient reproduces the pencil form identically, and
  // both sit above the principal value for any positive trial field.
  CHECK(obleig::rayleigh_quotient(sys, L, B, eig.v) ==
        Approx(eig.lambda).margin(1e-6 * sys.scale));

  std::mt19937 rng(7041);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int t = 0; t < 30; ++t) {
    Eigen::VectorXd psi(sys.n());
    for (int i = 0; i < sys.n(); ++i) psi[i] = u(rng);
    double q_form = obleig::pencil_form_quotient(sys, psi);
    CHECK(q_form >= eig.lambda - 1e-8 * sys.scale);
    CHECK(obleig::rayleigh_quotient(sys, L, B, psi) == Approx(q_form).margin(1e-6 * sys.scale));
  }

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.n());
  CHECK_THROWS_AS(obleig::pencil_form_quotient(sys, zero), obleig::ZeroVector);
}

TEST_CASE("truncation_sweep decreases towards the untruncated level") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  auto sweep = obleig::truncation_sweep(strip, EllipticOperator::laplacian_plus(
                                                   ScalarField::constant(0.0)),
                                        ObliqueBoundary::dirichlet(), {0, 0}, {3, 4, 5}, 0.1);
  REQUIRE(sweep.points.size() == 3);
  CHECK(sweep.points[0].lambda > sweep.points[1].lambda);
  CHECK(sweep.points[1].lambda > sweep.points[2].lambda);
  // Caps only ever raise the level.
  CHECK(sweep.extrapolated < sweep.points.back().lambda);
  CHECK(sweep.fit_coeff > 0);
  // Absorbing strip of width 2: the limit is (pi/2)^2, up to h^2 bias.
  CHECK(sweep.extrapolated == Approx(obleig::kPi * obleig::kPi / 4).margin(0.02));
}

TEST_CASE("global sweep skips unseedable centres") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  std::vector<Point> centres = {{0, 0}, {10, 0}, {0, 5}};
  auto g = obleig::lambda_global_sweep(strip, EllipticOperator::laplacian_plus(
                                                  ScalarField::constant(0.0)),
                                       ObliqueBoundary::dirichlet(), centres, {3, 4}, 0.1);
  REQUIRE(g.lambda.size() == 2);
  REQUIRE(g.lambda[0].size() == 3);
  // Translation along the strip leaves the truncated problem congruent.
  CHECK(g.lambda[0][0] == Approx(g.lambda[0][1]).margin(1e-8));
  CHECK(std::isnan(g.lambda[0][2]));
  CHECK(std::isnan(g.lambda[1][2]));
  CHECK(g.sup_lambda[0] == Approx(g.lambda[0][0]).margin(1e-12));
  CHECK(g.sup_lambda[0] > g.sup_lambda[1]);
  CHECK(std::isfinite(g.estimate));

  CHECK_THROWS_AS(obleig::lambda_global_sweep(strip, EllipticOperator::laplacian_plus(
                                                         ScalarField::constant(0.0)),
                                              ObliqueBoundary::dirichlet(), {}, {3}, 0.1),
                  obleig::ConfigError);
}

TEST_CASE("resolvent construction below the spectrum stays positive") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  EllipticOperator L = EllipticOperator::laplacian_plus(ScalarField::constant(0.0));
  ObliqueBoundary B = ObliqueBoundary::dirichlet();

  auto out = obleig::eigenfunction_below_lambda(strip, L, B, {0, 0}, 1.5, {4, 6, 8}, 0.1, 3.0, 0.5);
  int centre = out.grid->find(0, 0);
  REQUIRE(centre >= 0);
  CHECK(out.u[out.sys_of_node[centre]] == Approx(1.0));
  CHECK(out.min_on_window > 0);
  REQUIRE(out.window_diffs.size() == 2);
  CHECK(out.window_diffs[1] < out.window_diffs[0]);
  CHECK(out.residual < 1e-8);
}

TEST_CASE("resolvent construction rejects levels above the spectrum") {
  // The absorbing strip has principal value (pi/2)^2; level 3 sits above it.
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  EllipticOperator L = EllipticOperator::laplacian_plus(ScalarField::constant(0.0));
  ObliqueBoundary B = ObliqueBoundary::dirichlet();
  bool rejected = false;
  try {
    obleig::eigenfunction_below_lambda(strip, L, B, {0, 0}, 3.0, {4, 6, 8}, 0.1, 3.0, 0.5);
  } catch (const obleig::PositivityLoss&) {
    rejected = true;
  } catch (const obleig::ResolventSingular&) {
    rejected = true;
  }
  CHECK(rejected);
}

TEST_CASE("resolvent construction validates its schedule") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  EllipticOperator L = EllipticOperator::laplacian_plus(ScalarField::constant(0.0));
  ObliqueBoundary B = ObliqueBoundary::dirichlet();
  CHECK_THROWS_AS(
      obleig::eigenfunction_below_lambda(strip, L, B, {0, 0}, 1.0, {4}, 0.1, 3.0, 0.5),
      obleig::ConfigError);
  CHECK_THROWS_AS(
      obleig::eigenfunction_below_lambda(strip, L, B, {0, 0}, 1.0, {4, 4}, 0.1, 3.0, 0.5),
      obleig::ConfigError);
  CHECK_THROWS_AS(
      obleig::eigenfunction_below_lambda(strip, L, B, {0, 0}, 1.0, {4, 6}, 0.1, 5.0, 0.5),
      obleig::ConfigError);
}
