#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace qiup {

using Vec2 = Eigen::Vector2d;

/// Uniform square-pixel sampling lattice, centered on the optical axis.
/// Sample (i, j) sits at ((i - (nx-1)/2) * pitch, (j - (ny-1)/2) * pitch),
/// so even counts have no sample exactly at the origin.
struct FieldGrid {
  int nx = 0;
  int ny = 0;
  double pitch = 0.0;

  double origin_x() const { return -0.5 * (nx - 1) * pitch; }
  double origin_y() const { return -0.5 * (ny - 1) * pitch; }
  double x(int i) const { return origin_x() + i * pitch; }
  double y(int j) const { return origin_y() + j * pitch; }
  Vec2 coord(int i, int j) const { return {x(i), y(j)}; }

  // fractional sample index of a physical point
  double fx(double px) const { return (px - origin_x()) / pitch; }
  double fy(double py) const { return (py - origin_y()) / pitch; }

  int count() const { return nx * ny; }
  // flattened index, row-major with y outermost
  int flat(int i, int j) const { return j * nx + i; }

  double extent_x() const { return nx * pitch; }
  double extent_y() const { return ny * pitch; }

  bool covers(const Vec2& p) const {
    const double u = fx(p.x()), v = fy(p.y());
    return u >= 0.0 && u <= nx - 1 && v >= 0.0 && v <= ny - 1;
  }
};

inline FieldGrid make_grid(int nx, int ny, double pitch) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("FieldGrid: need at least 2 samples per axis");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw std::invalid_argument("FieldGrid: pitch must be positive and finite");
  return FieldGrid{nx, ny, pitch};
}

inline bool same_grid(const FieldGrid& a, const FieldGrid& b, double rel = 1e-9) {
  return a.nx == b.nx && a.ny == b.ny && std::abs(a.pitch - b.pitch) <= rel * std::max(a.pitch, b.pitch);
}

/// Geometric relation between the detection planes and the source planes.
/// ms maps signal-plane positions to the camera, mi maps idler-plane
/// positions to the object; eta is the anticorrelation ratio of the source.
struct PlaneMapping {
  double ms = 1.0;
  double mi = 1.0;
  double eta = 1.0;
};

inline void validate(const PlaneMapping& m) {
  if (m.ms == 0.0 || m.mi == 0.0) throw std::invalid_argument("PlaneMapping: magnifications must be nonzero");
  if (!std::isfinite(m.ms) || !std::isfinite(m.mi) || !std::isfinite(m.eta))
    throw std::invalid_argument("PlaneMapping: parameters must be finite");
}

inline Vec2 map_camera_to_source(const Vec2& rho_c, const PlaneMapping& m) { return rho_c / m.ms; }
inline Vec2 map_object_to_idler(const Vec2& rho_o, const PlaneMapping& m) { return rho_o / m.mi; }

/// Object-plane point conjugate to camera point rho_c in the tight-correlation
/// limit: rho_o = (mi / (eta * ms)) * rho_c.
inline Vec2 map_camera_to_object(const Vec2& rho_c, const PlaneMapping& m) {
  if (m.eta == 0.0) throw std::invalid_argument("PlaneMapping: eta must be nonzero for conjugate mapping");
  return rho_c * (m.mi / (m.eta * m.ms));
}

/// Overall image magnification of the conjugate mapping.
inline double image_magnification(const PlaneMapping& m) {
  if (m.eta == 0.0) throw std::invalid_argument("PlaneMapping: eta must be nonzero for image magnification");
  return m.eta * m.ms / m.mi;
}

}  // namespace qiup
