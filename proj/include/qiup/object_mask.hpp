#pragma once

#include <Eigen/Core>
#include <complex>
#include <filesystem>
#include <optional>

#include "qiup/grid.hpp"
#include "qiup/sampling.hpp"

namespace qiup {

/// Complex transmission profile of the object: amplitude |T| in [0, 1] and an
/// unbounded (unwrapped) phase, each sampled on the same raster. Points
/// outside the raster behave as clear aperture (|T| = 1, phase 0), so the
/// object only ever removes or delays light inside its sampled footprint.
/// Amplitude and phase are interpolated separately; the per-point reflection
/// magnitude sqrt(1 - |T|^2) is evaluated from the interpolated amplitude so
/// that |T|^2 + |R|^2 = 1 holds pointwise.
struct ObjectMask {
  FieldGrid grid;
  Eigen::ArrayXXd amplitude;  // (ny, nx), values in [0, 1]
  Eigen::ArrayXXd phase;      // (ny, nx), radians

  double amplitude_at(const Vec2& p) const {
    double a = bilinear_at(amplitude, grid, p, 1.0);
    return a < 0.0 ? 0.0 : (a > 1.0 ? 1.0 : a);
  }
  double phase_at(const Vec2& p) const { return bilinear_at(phase, grid, p, 0.0); }
  double reflection_at(const Vec2& p) const {
    const double a = amplitude_at(p);
    return std::sqrt(std::max(0.0, 1.0 - a * a));
  }
  std::complex<double> transmission_at(const Vec2& p) const {
    return std::polar(amplitude_at(p), phase_at(p));
  }
};

ObjectMask make_mask(const FieldGrid& grid, Eigen::ArrayXXd amplitude, Eigen::ArrayXXd phase);

/// Loads the amplitude from an 8/16-bit grayscale image (linear scaling to
/// [0, 1]) and the phase, if given, from a plain-text matrix in radians.
/// Both rasters must match the grid dimensions.
ObjectMask load_mask(const std::filesystem::path& amplitude_image,
                     const std::optional<std::filesystem::path>& phase_text, const FieldGrid& grid);

}  // namespace qiup
