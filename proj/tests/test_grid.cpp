#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdp/errors.hpp"
#include "cdp/grid.hpp"
#include "support.hpp"

using namespace cdp;
using cdp::testing::Rng;

TEST_CASE("linearize is row-major") {
  RegularGrid g({0, 0}, {1, 2}, {2, 3});
  const std::size_t m[] = {1, 2};
  CHECK(g.linearize(m) == 5);
  RegularGrid line = RegularGrid::line(0, 3, 4);
  const std::size_t z[] = {0};
  CHECK(line.linearize(z) == 0);
}

TEST_CASE("linearize rejects out-of-range indices") {
  RegularGrid g({0, 0}, {1, 2}, {2, 3});
  const std::size_t bad[] = {2, 0};
  CHECK_THROWS_AS(g.linearize(bad), IndexError);
  CHECK_THROWS_AS(g.delinearize(6), IndexError);
}

TEST_CASE("delinearize inverts linearize on random grids") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = testing::uniform_int(rng, 1, 4);
    std::vector<double> lo(d, 0.0), hi(d, 1.0);
    std::vector<std::size_t> n(d);
    for (auto& k : n) k = testing::uniform_int(rng, 2, 6);
    RegularGrid g(lo, hi, n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto m = g.delinearize(i);
      REQUIRE(g.linearize(m) == i);
      // Independent row-major recomputation.
      std::size_t flat = 0;
      for (std::size_t a = 0; a < d; ++a) flat = flat * n[a] + m[a];
      REQUIRE(flat == i);
    }
  }
}

TEST_CASE("hausdorff_to_box") {
  CHECK(hausdorff_to_box(RegularGrid::line(0, 1, 2)) == doctest::Approx(0.5));
  CHECK(hausdorff_to_box(RegularGrid::line(0, 1, 101)) == doctest::Approx(0.005));

  // Dense sample of the box: farthest distance to the nearest grid point.
  RegularGrid g({0, 0}, {1, 1}, {11, 11});
  double worst = 0.0;
  const int S = 400;
  for (int a = 0; a <= S; ++a)
    for (int b = 0; b <= S; ++b) {
      const double x = a / double(S), y = b / double(S);
      double best = 1e9;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.point(i);
        best = std::min(best, std::hypot(x - p[0], y - p[1]));
      }
      worst = std::max(worst, best);
    }
  CHECK(hausdorff_to_box(g) == doctest::Approx(worst).epsilon(1e-9));
  CHECK(hausdorff_to_box(g) == doctest::Approx(0.0707107).epsilon(1e-6));
}

TEST_CASE("diameter") {
  CHECK(diameter(RegularGrid::line(0, 1, 2)) == 1.0);
  CHECK(diameter(RegularGrid::line(-2, 2, 5)) == 4.0);

  RegularGrid g({0, 0}, {3, 4}, {4, 5});
  double pair = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = g.point(i);
    norm = std::max(norm, std::hypot(p[0], p[1]));
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto q = g.point(j);
      pair = std::max(pair, std::hypot(p[0] - q[0], p[1] - q[1]));
    }
  }
  CHECK(diameter(g) == doctest::Approx(std::max(pair, norm)));
  CHECK(diameter(g) == doctest::Approx(5.0));
}

TEST_CASE("grid points lie in the box within the Hausdorff radius of every box point") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t d = testing::uniform_int(rng, 1, 3);
    std::vector<double> lo(d), hi(d);
    std::vector<std::size_t> n(d);
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = testing::uniform(rng, -3, 0);
      hi[a] = lo[a] + testing::uniform(rng, 0.5, 3);
      n[a] = testing::uniform_int(rng, 2, 7);
    }
    RegularGrid g(lo, hi, n);
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(g.contains(g.point(i)));
    const double r = hausdorff_to_box(g);
    for (int s = 0; s < 500; ++s) {
      std::vector<double> x(d);
      for (std::size_t a = 0; a < d; ++a) x[a] = testing::uniform(rng, lo[a], hi[a]);
      double best = 1e9;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.point(i);
        double s2 = 0;
        for (std::size_t a = 0; a < d; ++a) s2 += (p[a] - x[a]) * (p[a] - x[a]);
        best = std::min(best, std::sqrt(s2));
      }
      REQUIRE(best <= r + 1e-12);
    }
  }
}

TEST_CASE("enumeration is stable") {
  RegularGrid g({-1, 0, 2}, {1, 3, 2}, {3, 4, 1});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.point(i) == g.point(i));
  CHECK(g.spacing()[2] == 0.0);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(RegularGrid({1}, {0}, {3}), BadParams);
  CHECK_THROWS_AS(RegularGrid({0}, {1}, {1}), BadParams);
  CHECK_THROWS_AS(RegularGrid({0}, {1}, {0}), BadParams);
  CHECK_NOTHROW(RegularGrid({2}, {2}, {1}));
}

TEST_CASE("mixed space") {
  MixedSpace s(RegularGrid({0.0}, {1.0}, {5}), RegularGrid({-3.0, 0.0}, {3.0, 4.0}, {7, 5}));
  CHECK(s.dim() == 3);
  const auto p = s.product();
  CHECK(p.dim() == 3);
  CHECK(p.size() == 5 * 7 * 5);
  CHECK_THROWS_AS(MixedSpace(std::nullopt, RegularGrid({0.5}, {1.5}, {2})), BadParams);
  CHECK_THROWS_AS(MixedSpace(std::nullopt, RegularGrid({0.0}, {1e17}, {2})), BadParams);
}

TEST_CASE("grid json round trip") {
  RegularGrid g({-1, 0}, {1, 3}, {3, 4});
  nlohmann::json j = g;
  CHECK(j.at("dim") == 2);
  CHECK(j.get<RegularGrid>() == g);
  MixedSpace s(g, std::nullopt);
  nlohmann::json js = s;
  const auto back = js.get<MixedSpace>();
  CHECK(back.continuous.has_value());
  CHECK(*back.continuous == g);
}
