#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <obleig/domain.hpp>
#include <obleig/errors.hpp>
#include <obleig/fields.hpp>
#include <obleig/geometry.hpp>

using Catch::Approx;
using obleig::Domain;
using obleig::Point;
using obleig::ScalarField;

TEST_CASE("growth_ratio_bound matches its closed form") {
  // Line, mass floor 2, f_sup 1, four steps: (1*4*5 + 1)^(1/4) - 1.
  CHECK(obleig::growth_ratio_bound(2.0, 1.0, 4, 1) == Approx(std::pow(21.0, 0.25) - 1.0).epsilon(1e-12));
  // Plane with mass floor pi: (1*4*25 + 1)^(1/4) - 1.
  CHECK(obleig::growth_ratio_bound(obleig::kPi, 1.0, 4, 2) ==
        Approx(std::pow(101.0, 0.25) - 1.0).epsilon(1e-12));
  // A larger mass floor can only tighten the bound.
  CHECK(obleig::growth_ratio_bound(4.0, 1.0, 4, 1) < obleig::growth_ratio_bound(2.0, 1.0, 4, 1));
  // More steps tighten it too: the pigeonhole has more shells to spread over.
  CHECK(obleig::growth_ratio_bound(2.0, 1.0, 8, 1) < obleig::growth_ratio_bound(2.0, 1.0, 4, 1));

  CHECK_THROWS_AS(obleig::growth_ratio_bound(0.0, 1.0, 4, 1), obleig::InvalidMass);
  CHECK_THROWS_AS(obleig::growth_ratio_bound(-1.0, 1.0, 4, 1), obleig::InvalidMass);
  CHECK_THROWS_AS(obleig::growth_ratio_bound(1.0, 1.0, 0, 1), obleig::ConfigError);
}

TEST_CASE("growth_audit on the line bottoms out at one quarter") {
  auto a = obleig::growth_audit(Domain::whole_space(1), ScalarField::constant(1.0), {0, 0}, 4, 0.05);

  REQUIRE(a.radii.size() == 4);
  REQUIRE(a.ratios.size() == 4);
  CHECK(a.radii.front() == Approx(2.0));
  CHECK(a.radii.back() == Approx(5.0));
  CHECK(a.omega1_mass == Approx(2.0).epsilon(0.06));

  // Unit shells over an inner interval of length 2m: ratios near 1/m.
  for (int m = 1; m <= 4; ++m)
    CHECK(a.ratios[m - 1] == Approx(1.0 / m).margin(0.03));
  CHECK(a.min_ratio == Approx(0.25).margin(0.012));
  CHECK(a.min_ratio == Approx(*std::min_element(a.ratios.begin(), a.ratios.end())));

  CHECK(a.f_sup == Approx(1.0));
  CHECK(a.bound == Approx(obleig::growth_ratio_bound(a.omega1_mass, 1.0, 4, 1)));
  CHECK(a.bound == Approx(std::pow(21.0, 0.25) - 1.0).epsilon(0.06));
  CHECK(a.ok);
}

TEST_CASE("growth_audit in the plane sees the 9/16 shell") {
  auto a =
      obleig::growth_audit(Domain::whole_space(2), ScalarField::constant(1.0), {0, 0}, 4, 0.1);
  // Last shell over the inner disc: (25 - 16)/16.
  CHECK(a.ratios.back() == Approx(0.5625).epsilon(0.03));
  CHECK(a.min_ratio == Approx(0.5625).epsilon(0.03));
  CHECK(a.bound == Approx(std::pow(101.0, 0.25) - 1.0).epsilon(0.06));
  CHECK(a.ok);
}

TEST_CASE("growth_audit respects the field, not just the geometry") {
  // A rapidly decaying weight starves the shells while f_sup stays 1, so the
  // audit passes with a tiny min_ratio and an unchanged a-priori bound shape.
  ScalarField f = ScalarField::from_expression("exp(0 - x^2)");
  auto a = obleig::growth_audit(Domain::whole_space(1), f, {0, 0}, 4, 0.05);
  CHECK(a.f_sup == Approx(1.0).margin(1e-12));
  CHECK(a.min_ratio < 1e-4);
  CHECK(a.ok);
  // Gaussian mass on [-1, 1]: sqrt(pi) erf(1).
  CHECK(a.omega1_mass == Approx(std::sqrt(obleig::kPi) * std::erf(1.0)).epsilon(0.03));
}

TEST_CASE("mass_of integrates against the truncation") {
  double clipped_disc = 4.0 * (std::sqrt(3.0) / 2.0 + 2.0 * std::asin(0.5));
  CHECK(obleig::mass_of(Domain::strip(1.0, 1, 0.0, 2), ScalarField::constant(2.0), {0, 0}, 2.0, 0.05) ==
        Approx(2.0 * clipped_disc).epsilon(0.01));
  CHECK_THROWS_AS(obleig::mass_of(Domain::strip(1.0, 1, 0.0, 2), ScalarField::constant(0.0), {0, 0}, 2.0, 0.1),
                  obleig::InvalidMass);
}

TEST_CASE("interior_ball_bounds accepts the strip and the chain") {
  auto strip = obleig::interior_ball_bounds(Domain::strip(1.0, 1, 0.0, 2), {0, 0.5}, 1.0, 0.02);
  // Unit disc at (0, 0.5) clipped by the wall at height 1: pi minus a
  // half-height circular segment.
  double segment = std::acos(0.5) - 0.5 * std::sqrt(0.75);
  CHECK(strip.omega1_measured == Approx(obleig::kPi - segment).margin(0.02));
  CHECK(strip.omega1_bound == Approx(obleig::kPi / 4));
  CHECK(strip.annulus_bound == Approx(obleig::kPi / 16));
  CHECK(strip.omega1_ok);
  CHECK(strip.annulus_ok);
  REQUIRE(strip.annulus_measured.size() == 3);
  for (double m : strip.annulus_measured) CHECK(m > strip.annulus_bound);

  auto chain = obleig::interior_ball_bounds(obleig::annuli_chain(4), {1.5, 0}, 0.5, 0.02);
  CHECK(chain.omega1_bound == Approx(obleig::kPi / 16));
  CHECK(chain.omega1_ok);
  CHECK(chain.annulus_ok);

  CHECK_THROWS_AS(obleig::interior_ball_bounds(Domain::strip(1.0, 1, 0.0, 2), {0, 0}, 0.0, 0.1),
                  obleig::ConfigError);
}

TEST_CASE("interior_ball_bounds rejects a wedge that overclaims") {
  // 45-degree wedge about the y axis, claiming interior-ball radius 1/2. The
  // unit truncation near the tip holds roughly an eighth of the disc, well
  // under the pi/4 the claim would demand.
  double c = std::cos(obleig::kPi / 8), s = std::sin(obleig::kPi / 8);
  Domain wedge = Domain::meet({Domain::half_plane({c, s}, 0.0, 2), Domain::half_plane({-c, s}, 0.0, 2)},
                              0.5, "wedge");
  auto a = obleig::interior_ball_bounds(wedge, {0, 0.15}, 0.5, 0.02);
  CHECK_FALSE(a.omega1_ok);
  CHECK(a.omega1_measured > 0.35);
  CHECK(a.omega1_measured < 0.52);
}

TEST_CASE("internal_covering keeps every sample within 3r/4") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Point> cloud;
  while (cloud.size() < 600) {
    Point p{u(rng), u(rng)};
    if (obleig::norm(p) <= 2.0) cloud.push_back(p);
  }
  // A deliberately lonely sample near the rim must still be covered.
  cloud.push_back({1.99, 0.0});

  auto rep = obleig::internal_covering(cloud, 1.0, 2.0, 2);
  REQUIRE(rep.cardinality >= 1);
  CHECK(rep.cardinality == int(rep.cover_points.size()));
  CHECK(rep.cardinality <= rep.lattice_bound);

  double worst = 0;
  for (const Point& p : cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : rep.cover_points) best = std::min(best, obleig::dist(p, q));
    worst = std::max(worst, best);
  }
  CHECK(worst <= 0.75 + 1e-12);

  // The cardinality cap depends only on (r, R, d), not on the cloud.
  auto rep2 = obleig::internal_covering({{0.1, 0.1}}, 1.0, 2.0, 2);
  CHECK(rep2.lattice_bound == rep.lattice_bound);
  CHECK(rep2.cardinality == 1);

  CHECK_THROWS_AS(obleig::internal_covering({}, 1.0, 2.0, 2), obleig::ConfigError);
  CHECK_THROWS_AS(obleig::internal_covering(cloud, 2.0, 1.0, 2), obleig::ConfigError);
}

TEST_CASE("transversality_check measures the strip crossing angle") {
  auto rep = obleig::transversality_check(Domain::strip(1.0, 1, 0.0, 2), {0, 0}, 5.0);
  CHECK(rep.sphere_meets_boundary);
  // Circle of radius 5 meets the wall y = 1 where the normal component of
  // the radius vector is 1/5.
  CHECK(rep.max_alignment == Approx(0.2).margin(0.01));
  CHECK(rep.transversal);
  CHECK(rep.crossings.size() >= 4);
}

TEST_CASE("transversality_check flags a tangent sphere") {
  auto rep =
      obleig::transversality_check(Domain::half_plane({0, 1}, 0.0, 2), {0, 1}, 1.0);
  CHECK(rep.sphere_meets_boundary);
  CHECK(rep.max_alignment > 0.95);
  CHECK_FALSE(rep.transversal);
}

TEST_CASE("transversality_check is vacuous without a boundary") {
  auto rep = obleig::transversality_check(Domain::whole_space(2), {0, 0}, 1.0);
  CHECK_FALSE(rep.sphere_meets_boundary);
  CHECK(rep.max_alignment == Approx(-1.0));
  CHECK(rep.transversal);
}

TEST_CASE("transversality_check on the line") {
  Domain seg = Domain::strip(5.0, 0, 0.0, 1);
  // The point pair at distance 4 stays interior.
  auto inside = obleig::transversality_check(seg, {0, 0}, 4.0);
  CHECK_FALSE(inside.sphere_meets_boundary);
  CHECK(inside.transversal);
  // Landing on an endpoint is always a tangency in one dimension.
  auto touch = obleig::transversality_check(seg, {0, 0}, 5.0);
  CHECK(touch.sphere_meets_boundary);
  CHECK(touch.max_alignment == Approx(1.0).margin(1e-6));
  CHECK_FALSE(touch.transversal);
}

TEST_CASE("first_boundary_hit marches to the wall") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  auto up = obleig::first_boundary_hit(strip, {0, 0}, {0, 1}, 10.0);
  REQUIRE(up.has_value());
  CHECK(*up == Approx(1.0).margin(1e-9));

  // The distance is in parameter units of the ray, so a doubled direction
  // halves it.
  auto fast = obleig::first_boundary_hit(strip, {0, 0}, {0, 2}, 10.0);
  REQUIRE(fast.has_value());
  CHECK(*fast == Approx(0.5).margin(1e-9));

  auto along = obleig::first_boundary_hit(strip, {0, 0}, {1, 0}, 50.0);
  CHECK_FALSE(along.has_value());

  auto slanted = obleig::first_boundary_hit(strip, {0, -0.5}, {0.6, 0.8}, 10.0);
  REQUIRE(slanted.has_value());
  CHECK(*slanted == Approx(1.5 / 0.8).margin(1e-9));
}
