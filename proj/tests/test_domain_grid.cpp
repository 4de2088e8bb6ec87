#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <obleig/domain.hpp>
#include <obleig/grid.hpp>

using namespace obleig;
using Catch::Approx;

TEST_CASE("signed distances keep the inside positive") {
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  CHECK(strip.sdf({3.0, 0.0}) == Approx(1.0));
  CHECK(strip.sdf({-7.0, 0.9}) == Approx(0.1));
  CHECK(strip.sdf({0.0, 1.4}) == Approx(-0.4));

  Domain disc = Domain::ball({1, 0}, 2.0, 2);
  CHECK(disc.sdf({1, 0}) == Approx(2.0));
  CHECK(disc.sdf({4, 0}) == Approx(-1.0));

  Domain half = Domain::half_plane({0, 1}, 0.0, 2);
  CHECK(half.sdf({5, 2}) > 0);   // inside is where normal . p exceeds the offset
  CHECK(half.sdf({5, -2}) < 0);

  Domain ring = Domain::annulus({0, 0}, 2.0, 3.0, 2);
  CHECK(ring.sdf({2.5, 0}) == Approx(0.5));
  CHECK(ring.sdf({1.0, 0}) < 0);
  CHECK(ring.sdf({3.5, 0}) < 0);
}

TEST_CASE("the annuli chain is one connected region through the corridor") {
  Domain chain = annuli_chain(4, 2);
  CHECK(chain.sdf({0, 0}) > 0);        // seed ball
  CHECK(chain.sdf({3.5, 0}) > 0);      // corridor between ring 1 and ring 2
  CHECK(chain.sdf({4.5, 0}) > 0);      // ring 2 body
  CHECK(chain.sdf({0, 4.5}) > 0);      // ring 2 away from the corridor
  CHECK(chain.sdf({0, 3.5}) < 0);      // gap between rings, off corridor
  CHECK(chain.sdf({16.5, 0}) > 0);     // outermost ring
  CHECK(chain.interior_ball_radius() == Approx(0.5));

  // the flood fill must reach a far ring from the centre
  auto g = TruncatedGrid::truncate(chain, {0, 0}, 12.0, 0.1);
  CHECK(g.find(85, 0) >= 0);  // x = 8.5 sits in ring 3
  CHECK(g.find(0, 85) >= 0);  // reached around the ring, not just along the corridor
}

TEST_CASE("truncation roles and quadrature on an interval") {
  // 1-D strip of half-width 5 inside a radius-8 sphere: walls are oblique
  // carriers, no caps at all.
  Domain seg = Domain::strip(5.0, 0, 0.0, 1);
  auto g = TruncatedGrid::truncate(seg, {0, 0}, 8.0, 0.05);
  int interior = 0, oblique = 0, caps = 0;
  for (int i = 0; i < g.size(); ++i) {
    switch (g.node(i).role) {
      case NodeRole::interior: ++interior; break;
      case NodeRole::oblique: ++oblique; break;
      case NodeRole::cap: ++caps; break;
    }
  }
  CHECK(caps == 0);
  CHECK(oblique == 2);
  CHECK(interior > 190);
  CHECK(g.measure() == Approx(10.0).epsilon(0.02));
  CHECK(g.integrate([](Point p) { return p.x * p.x; }) == Approx(1000.0 / 12).epsilon(0.02));
}

TEST_CASE("whole-space truncation builds a cap ring") {
  Domain plane = Domain::whole_space(2);
  auto g = TruncatedGrid::truncate(plane, {0, 0}, 2.0, 0.1);
  int caps = 0;
  for (int i = 0; i < g.size(); ++i)
    if (g.node(i).role == NodeRole::cap) ++caps;
  CHECK(caps > 0);
  CHECK(g.measure() == Approx(kPi * 4.0).epsilon(0.05));
}

TEST_CASE("disc measure converges at first order in the spacing") {
  Domain disc = Domain::ball({0, 0}, 1.0, 2);
  auto g = TruncatedGrid::truncate(disc, {0, 0}, 2.0, 0.02);
  CHECK(g.measure() == Approx(kPi).epsilon(0.01));
}

TEST_CASE("neighbors are mutual over carrier nodes") {
  Domain seg = Domain::strip(1.0, 1, 0.0, 2);
  auto g = TruncatedGrid::truncate(seg, {0, 0}, 3.0, 0.1);
  for (int i = 0; i < g.size(); ++i) {
    if (g.node(i).role != NodeRole::interior) continue;
    for (int axis = 0; axis < 2; ++axis)
      for (int dir = -1; dir <= 1; dir += 2) {
        int nb = g.neighbor(i, axis, dir);
        if (nb < 0) continue;
        CHECK(g.neighbor(nb, axis, -dir) == i);
      }
  }
}

TEST_CASE("truncation preconditions are enforced") {
  Domain seg = Domain::strip(5.0, 0, 0.0, 1);
  CHECK_THROWS_AS(TruncatedGrid::truncate(seg, {0, 0}, 8.0, -0.1), ConfigError);
  CHECK_THROWS_AS(TruncatedGrid::truncate(seg, {0, 0}, 1.0, 0.3), ConfigError);  // h >= r/4
  CHECK_THROWS_AS(TruncatedGrid::truncate(seg, {20, 0}, 8.0, 0.05), SeedOutsideDomain);
  // declared interior ball must be resolved by the spacing
  Domain chain = annuli_chain(2, 2);
  CHECK_THROWS_AS(TruncatedGrid::truncate(chain, {0, 0}, 4.0, 0.4), ConfigError);
}
