#pragma once

#include <Eigen/Core>

#include "qiup/grid.hpp"

namespace qiup {

/// Bilinear interpolation of a sampled map at a physical point.
/// `map` is indexed (row j, col i) on `grid`; points outside the convex hull
/// of sample centers return `outside`. Exactly reproduces node values.
template <typename Derived>
double bilinear_at(const Eigen::ArrayBase<Derived>& map, const FieldGrid& grid, const Vec2& p,
                   double outside) {
  const double u = grid.fx(p.x());
  const double v = grid.fy(p.y());
  if (!(u >= 0.0 && u <= grid.nx - 1 && v >= 0.0 && v <= grid.ny - 1)) return outside;
  int i0 = static_cast<int>(u);
  int j0 = static_cast<int>(v);
  if (i0 > grid.nx - 2) i0 = grid.nx - 2;  // u == nx-1 lands in the last cell
  if (j0 > grid.ny - 2) j0 = grid.ny - 2;
  if (grid.nx == 1) i0 = 0;
  if (grid.ny == 1) j0 = 0;
  const double tu = u - i0;
  const double tv = v - j0;
  const int i1 = grid.nx == 1 ? i0 : i0 + 1;
  const int j1 = grid.ny == 1 ? j0 : j0 + 1;
  const double a = map(j0, i0) * (1.0 - tu) + map(j0, i1) * tu;
  const double b = map(j1, i0) * (1.0 - tu) + map(j1, i1) * tu;
  return a * (1.0 - tv) + b * tv;
}

}  // namespace qiup
