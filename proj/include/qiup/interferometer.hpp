#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qiup/correlation.hpp"
#include "qiup/grid.hpp"
#include "qiup/object_mask.hpp"
#include "qiup/phase_field.hpp"

namespace qiup {

/// Source amplitudes, spatially independent phase offset, the three system
/// phase profiles, and the plane geometry. phi_in bundles the pump phase
/// difference with the arguments of the source amplitudes, so a1_mag/a2_mag
/// are magnitudes only.
struct InterferometerConfig {
  double a1_mag = 1.0 / std::numbers::sqrt2;
  double a2_mag = 1.0 / std::numbers::sqrt2;
  double phi_in = 0.0;
  PhaseField phi_s;        // camera plane
  PhaseField phi_i;        // object plane
  PhaseField phi_i_prime;  // idler source plane
  PlaneMapping mapping;
};

void validate(const InterferometerConfig& cfg);

/// Camera counting-rate map. `values` is normalized by the per-pixel kernel
/// mass so a clear aperture with zero phases reads |a1|^2+|a2|^2+2|a1||a2| at
/// phi_in = 0; `raw` and `kernel_mass` keep the un-normalized quadrature for
/// diagnostics and linearity checks.
struct RateMap {
  FieldGrid grid;
  Eigen::ArrayXXd values;
  Eigen::ArrayXXd raw;
  Eigen::ArrayXXd kernel_mass;
  long long zero_mass_pixels = 0;  // mass below 1e-12, value forced to 0
  double clipped_fraction = 0.0;   // tabulated-kernel queries outside the domain
};

struct NoiseSpec {
  enum class Kind { Off, Poisson };
  Kind kind = Kind::Off;
  double scale = 0.0;  // mean counts per unit normalized rate
  std::uint64_t seed = 0;
};

/// Ordered phase-stepped rate maps; ladder holds the absolute phi_in of each
/// frame (it replaces InterferometerConfig::phi_in).
struct FringeStack {
  FieldGrid grid;
  std::vector<Eigen::ArrayXXd> frames;
  std::vector<double> ladder;
  NoiseSpec noise;
  long long zero_mass_pixels = 0;
  double clipped_fraction = 0.0;
};

/// Quadrature of the counting-rate integrand over the mask's own lattice
/// (midpoint rule), one camera pixel at a time, for Gaussian or Tabulated
/// kernels. Object-plane points outside the mask raster contribute as clear
/// aperture. Worker count 0 means all hardware threads.
RateMap rate_map_general(const ObjectMask& mask, const CorrelationKernel& kernel,
                         const InterferometerConfig& cfg, const FieldGrid& camera, int workers = 0);

/// Closed-form tight-correlation limit: each camera pixel reads the object at
/// rho_o = (M_I/(eta M_S)) rho_c.
RateMap rate_map_delta(const ObjectMask& mask, double eta, const InterferometerConfig& cfg,
                       const FieldGrid& camera, int workers = 0);

/// One rate map per phi_in value; Delta kernels dispatch to the closed form.
FringeStack fringe_stack(const ObjectMask& mask, const CorrelationKernel& kernel,
                         const InterferometerConfig& cfg, const FieldGrid& camera,
                         const std::vector<double>& phi_in_values, int workers = 0);

/// Per-pixel Poisson resampling: value -> Poisson(value * scale) / scale.
/// Draws are seeded by (seed, frame, pixel) so the result is independent of
/// worker scheduling; exact zeros stay zero.
FringeStack add_shot_noise(const FringeStack& stack, double mean_counts_per_unit_rate,
                           std::uint64_t seed);

}  // namespace qiup
