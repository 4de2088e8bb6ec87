#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include <obleig/classify.hpp>
#include <obleig/domain.hpp>
#include <obleig/errors.hpp>
#include <obleig/fields.hpp>
#include <obleig/operators.hpp>
#include <obleig/parabolic.hpp>

using Catch::Approx;
using obleig::Domain;
using obleig::EllipticOperator;
using obleig::ObliqueBoundary;
using obleig::Point;
using obleig::ReactionSpec;
using obleig::ScalarField;
using obleig::SimConfig;
using obleig::TruncatedGrid;

namespace {

obleig::DiscreteSystem interval_system(double h, const EllipticOperator& L,
                                       const ObliqueBoundary& B) {
  auto grid = std::make_shared<const TruncatedGrid>(
      TruncatedGrid::truncate(Domain::strip(5.0, 0, 0.0, 1), {0, 0}, 12.0, h));
  return obleig::assemble(grid, L, B);
}

}  // namespace

TEST_CASE("pure decay of a flat state is exactly geometric") {
  // With u constant, no caps and reflecting ends, each semi-implicit step
  // multiplies by exactly 1 - dt.
  auto sys = interval_system(0.05, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                             ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 5.0;
  cfg.dt = 0.01;
  auto traj = obleig::evolve(sys, ReactionSpec::decay(), [](Point) { return 1.0; }, cfg);

  CHECK(traj.times.back() == Approx(5.0).margin(1e-12));
  REQUIRE(traj.frames.size() == 501);
  int centre = traj.grid->find(0, 0);
  REQUIRE(centre >= 0);
  double expected = std::pow(0.99, 500);
  CHECK(traj.value_at(traj.frames.size() - 1, centre) == Approx(expected).margin(1e-10));
  // The flat profile stays flat.
  CHECK(traj.frames.back().maxCoeff() - traj.frames.back().minCoeff() < 1e-10);
  // And the continuum limit e^{-5} is nearby but distinct.
  CHECK(std::abs(expected - std::exp(-5.0)) < 2e-4);
}

TEST_CASE("conservative flux evolution preserves mass to rounding") {
  auto sys = interval_system(
      0.05,
      EllipticOperator::selfadjoint(obleig::MatrixField::identity(), ScalarField::constant(0.0)),
      ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt = 0.01;
  cfg.frame_dt = 0.2;
  auto traj =
      obleig::evolve(sys, ReactionSpec::none(), [](Point p) { return std::exp(-p.x * p.x); }, cfg);
  double m0 = obleig::frame_mass(traj, 0, sys.w);
  REQUIRE(m0 > 0);
  for (size_t k = 1; k < traj.frames.size(); ++k)
    CHECK(std::abs(obleig::frame_mass(traj, k, sys.w) - m0) <= 1e-10 * m0);
  // Diffusion spreads the bump: the peak must drop.
  CHECK(traj.frames.back().maxCoeff() < traj.frames.front().maxCoeff());
}

TEST_CASE("ordered data stay ordered through the evolution") {
  auto sys = interval_system(0.05, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                             ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 2.0;
  cfg.dt = 0.1;
  cfg.frame_dt = 0.5;
  auto bump = [](Point p) { return 0.3 * std::exp(-p.x * p.x); };
  auto lifted = [&](Point p) { return 0.3 * std::exp(-p.x * p.x) + 0.2; };
  double worst = obleig::comparison_check(sys, ReactionSpec::logistic(), bump, lifted, cfg);
  CHECK(worst <= 1e-12);
}

TEST_CASE("evolution guards its step size and detects blow-up") {
  auto sys = interval_system(0.1, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                             ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt = 0.1;
  // lipschitz 6 at dt 0.1 breaks the explicit-reaction stability budget
  CHECK_THROWS_AS(obleig::evolve(sys, ReactionSpec::scaled_logistic(2.0),
                                 [](Point) { return 0.1; }, cfg),
                  obleig::ConfigError);
  cfg.dt = -0.1;
  CHECK_THROWS_AS(obleig::evolve(sys, ReactionSpec::none(), [](Point) { return 0.1; }, cfg),
                  obleig::ConfigError);

  SimConfig grow;
  grow.t_end = 3.0;
  grow.dt = 0.05;
  grow.blowup_factor = 10.0;
  ReactionSpec linear = ReactionSpec::linear(ScalarField::constant(3.0));
  CHECK_THROWS_AS(obleig::evolve(sys, linear, [](Point) { return 1.0; }, grow), obleig::BlowUp);
}

TEST_CASE("logistic invasion travels at speed two") {
  auto grid = std::make_shared<const TruncatedGrid>(
      TruncatedGrid::truncate(Domain::whole_space(1), {0, 0}, 40.0, 0.1));
  auto sys = obleig::assemble(grid, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                              ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 30.0;
  cfg.dt = 0.05;
  cfg.frame_dt = 0.5;
  auto traj = obleig::evolve(sys, ReactionSpec::logistic(),
                             [](Point p) { return p.x <= -30.0 ? 1.0 : 0.0; }, cfg);

  auto fit = obleig::measure_front_speed(traj, 0.5, 10.0, 30.0);
  CHECK(fit.speed > 1.8);
  CHECK(fit.speed < 2.1);
  REQUIRE(fit.positions.size() >= 10);
  // The crossing point marches monotonically to the right.
  for (size_t k = 1; k < fit.positions.size(); ++k)
    CHECK(fit.positions[k] > fit.positions[k - 1]);

  CHECK_THROWS_AS(obleig::measure_front_speed(traj, 2.0, 10.0, 30.0), obleig::NoFront);
}

TEST_CASE("front speed is a one-dimensional readout") {
  auto grid = std::make_shared<const TruncatedGrid>(
      TruncatedGrid::truncate(Domain::strip(1.0, 1, 0.0, 2), {0, 0}, 2.0, 0.2));
  auto sys = obleig::assemble(grid, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                              ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 0.1;
  cfg.dt = 0.05;
  auto traj = obleig::evolve(sys, ReactionSpec::none(), [](Point) { return 0.5; }, cfg);
  CHECK_THROWS_AS(obleig::measure_front_speed(traj, 0.2, 0.0, 0.1), obleig::MismatchedScenario);
}

TEST_CASE("kpp probe accepts the logistic and rejects overshoots") {
  std::vector<Point> probes = {{0, 0}, {2, 0}, {-3, 0}};
  CHECK(ReactionSpec::logistic().is_kpp(probes));
  CHECK(ReactionSpec::scaled_logistic(0.5).is_kpp(probes));

  ReactionSpec overshoot;
  overshoot.f = [](Point, double u) { return u * (1 - u) * (1 + 5 * u); };
  overshoot.fs0 = [](Point) { return 1.0; };
  overshoot.lipschitz = 10;
  CHECK_FALSE(overshoot.is_kpp(probes));

  ReactionSpec displaced;
  displaced.f = [](Point, double u) { return 0.1 + u; };
  displaced.fs0 = [](Point) { return 1.0; };
  displaced.lipschitz = 1;
  CHECK_FALSE(displaced.is_kpp(probes));
}

TEST_CASE("reaction constructors validate their inputs") {
  ScalarField unbounded = ScalarField::from_expression("cos(x)");
  CHECK_THROWS_AS(ReactionSpec::linear(unbounded), obleig::ConfigError);
  ScalarField bounded = ScalarField::from_expression("cos(x)").with_bounds(-1.0, 1.0);
  ReactionSpec ok = ReactionSpec::linear(bounded);
  CHECK(ok.lipschitz == Approx(1.0));
  CHECK(ok.f({0, 0}, 2.0) == Approx(2.0));
}

TEST_CASE("classification reads the probe windows") {
  auto sys = interval_system(0.05, EllipticOperator::laplacian_plus(ScalarField::constant(0.0)),
                             ObliqueBoundary::neumann());
  SimConfig cfg;
  cfg.t_end = 16.0;
  cfg.dt = 0.02;
  cfg.frame_dt = 0.25;
  auto decaying = obleig::evolve(sys, ReactionSpec::decay(), [](Point) { return 1.0; }, cfg);

  obleig::ProbeWindow core;
  core.box = obleig::Box{{-2, 0}, {2, 0}};
  core.central = true;
  core.label = "core";
  obleig::ProbeWindow far;
  far.box = obleig::Box{{3, 0}, {5, 0}};
  far.label = "far";

  auto verdict = obleig::classify_long_run(decaying, {core, far});
  CHECK(verdict.classification == obleig::Stability::converges_uniformly_to_zero);
  REQUIRE(verdict.windows.size() == 2);
  CHECK(verdict.windows[0].tail_sup < 1e-3);
  CHECK(verdict.inf_liminf_estimate < 1e-3);
  CHECK(verdict.supnorm_growth < 1.0);

  // A logistic run from a small positive state climbs to saturation, which
  // is repulsion of zero by a factor well past the threshold.
  auto repelled = obleig::evolve(sys, ReactionSpec::logistic(), [](Point) { return 0.01; }, cfg);
  auto verdict2 = obleig::classify_long_run(repelled, {core, far});
  CHECK(verdict2.classification == obleig::Stability::uniformly_repelled);
  CHECK(verdict2.inf_liminf_estimate > 0.9);

  CHECK_THROWS_AS(obleig::classify_long_run(decaying, {}), obleig::ConfigError);
  CHECK_THROWS_AS(obleig::classify_long_run(decaying, {far}), obleig::ConfigError);
  obleig::ProbeWindow outside;
  outside.box = obleig::Box{{20, 0}, {22, 0}};
  outside.central = true;
  CHECK_THROWS_AS(obleig::classify_long_run(decaying, {outside}), obleig::ConfigError);
}
