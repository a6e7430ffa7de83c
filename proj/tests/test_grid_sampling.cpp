#include <random>
#include <set>

#include "doctest.h"
#include "qiup/grid.hpp"
#include "qiup/phase_field.hpp"
#include "qiup/sampling.hpp"

using namespace qiup;

TEST_CASE("grids are centered on the axis") {
  const FieldGrid even = make_grid(4, 6, 0.5);
  CHECK(even.x(0) == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(even.x(3) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(even.x(1) + even.x(2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(even.y(0) == doctest::Approx(-1.25).epsilon(1e-15));

  const FieldGrid odd = make_grid(5, 5, 1.0);
  CHECK(odd.x(2) == 0.0);
  CHECK(odd.x(0) == -2.0);
  CHECK(odd.x(4) == 2.0);
}

TEST_CASE("fractional index inverts the coordinate") {
  const FieldGrid g = make_grid(7, 3, 0.37);
  for (int i = 0; i < g.nx; ++i) CHECK(g.fx(g.x(i)) == doctest::Approx(i).epsilon(1e-12));
  for (int j = 0; j < g.ny; ++j) CHECK(g.fy(g.y(j)) == doctest::Approx(j).epsilon(1e-12));
}

TEST_CASE("flat index is a bijection") {
  const FieldGrid g = make_grid(5, 4, 1.0);
  std::set<int> seen;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) seen.insert(g.flat(i, j));
  CHECK(seen.size() == static_cast<size_t>(g.count()));
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == g.count() - 1);
}

TEST_CASE("grid construction rejects bad parameters") {
  CHECK_THROWS(make_grid(1, 4, 1.0));
  CHECK_THROWS(make_grid(4, 1, 1.0));
  CHECK_THROWS(make_grid(4, 4, 0.0));
  CHECK_THROWS(make_grid(4, 4, -2.0));
}

TEST_CASE("covers matches the sample hull") {
  const FieldGrid g = make_grid(4, 4, 1.0);
  CHECK(g.covers({0.0, 0.0}));
  CHECK(g.covers({-1.5, 1.5}));
  CHECK_FALSE(g.covers({-1.51, 0.0}));
  CHECK_FALSE(g.covers({0.0, 1.51}));
}

TEST_CASE("bilinear interpolation is exact at nodes and for affine maps") {
  const FieldGrid g = make_grid(6, 5, 0.8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::ArrayXXd values(g.ny, g.nx);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) values(j, i) = u(rng);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      CHECK(bilinear_at(values, g, g.coord(i, j), -9.0) == doctest::Approx(values(j, i)).epsilon(1e-14));

  Eigen::ArrayXXd affine(g.ny, g.nx);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) affine(j, i) = 0.3 + 1.7 * g.x(i) - 0.9 * g.y(j);
  for (int t = 0; t < 200; ++t) {
    const Vec2 p(u(rng), u(rng) * 0.8);
    if (!g.covers(p)) continue;
    CHECK(bilinear_at(affine, g, p, -9.0) ==
          doctest::Approx(0.3 + 1.7 * p.x() - 0.9 * p.y()).epsilon(1e-12));
  }
}

TEST_CASE("bilinear interpolation uses the fill value outside") {
  const FieldGrid g = make_grid(4, 4, 1.0);
  const Eigen::ArrayXXd values = Eigen::ArrayXXd::Constant(4, 4, 5.0);
  CHECK(bilinear_at(values, g, {1.6, 0.0}, -3.0) == -3.0);
  CHECK(bilinear_at(values, g, {0.0, -1.6}, -3.0) == -3.0);
  CHECK(bilinear_at(values, g, {1.5, 1.5}, -3.0) == 5.0);
}

TEST_CASE("plane mappings scale coordinates as documented") {
  const PlaneMapping m{2.0, 0.5, 1.5};
  validate(m);
  CHECK(map_camera_to_source({4.0, -2.0}, m).isApprox(Vec2(2.0, -1.0)));
  CHECK(map_object_to_idler({3.0, 1.0}, m).isApprox(Vec2(6.0, 2.0)));
  CHECK(map_camera_to_object({6.0, 0.0}, m).isApprox(Vec2(1.0, 0.0)));
  CHECK(image_magnification(m) == doctest::Approx(6.0));

  CHECK_THROWS(validate(PlaneMapping{0.0, 1.0, 1.0}));
  CHECK_THROWS(validate(PlaneMapping{1.0, 0.0, 1.0}));
  CHECK_THROWS(image_magnification(PlaneMapping{1.0, 1.0, 0.0}));
}

TEST_CASE("phase fields evaluate constants and sampled maps") {
  const PhaseField c(0.75);
  CHECK(c.is_constant());
  CHECK(c.at({100.0, -100.0}) == 0.75);

  const FieldGrid g = make_grid(4, 4, 1.0);
  Eigen::ArrayXXd map(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) map(j, i) = i + 10 * j;
  const PhaseField f(g, map);
  CHECK_FALSE(f.is_constant());
  CHECK(f.at(g.coord(2, 1)) == doctest::Approx(12.0));
  CHECK(f.at({50.0, 0.0}) == 0.0);  // outside the raster

  CHECK_THROWS(PhaseField(g, Eigen::ArrayXXd::Zero(3, 4)));
}
