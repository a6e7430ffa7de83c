#pragma once

#include <Eigen/Core>

#include "qiup/grid.hpp"
#include "qiup/interferometer.hpp"
#include "qiup/object_mask.hpp"
#include "qiup/phase_field.hpp"

namespace qiup {

using ValidMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Fringe visibility per camera pixel, in [0, 1]; invalid where the fit had
/// no usable mean intensity.
struct VisibilityMap {
  FieldGrid grid;
  Eigen::ArrayXXd values;
  ValidMask valid;
};

/// Fitted fringe phase per camera pixel, principal branch (-pi, pi].
struct PhaseMap {
  FieldGrid grid;
  Eigen::ArrayXXd values;
  ValidMask valid;
};

/// Map resampled to object-plane coordinates.
struct ObjectEstimate {
  FieldGrid grid;
  Eigen::ArrayXXd values;
  ValidMask valid;
};

/// Per-pixel sinusoid fit R_k = A + B cos(phi_k + C) over a fringe stack.
/// Equally spaced full-period ladders use the closed-form N-bucket estimator;
/// anything else falls back to least squares on the {1, cos, sin} basis.
struct FringeFit {
  FieldGrid grid;
  Eigen::ArrayXXd mean;        // A
  VisibilityMap visibility;    // B/A, clipped to [0, 1]
  PhaseMap phase;              // C
  long long clipped = 0;       // pixels where B/A exceeded 1
  long long masked = 0;        // pixels with A <= 1e-12
};

FringeFit fit_fringes(const FringeStack& stack, int workers = 0);

/// Relabels a camera-plane visibility map in object-plane coordinates via
/// rho_o = (M_I/(eta M_S)) rho_c. Pure coordinate change: no interpolation,
/// so magnified features return to their object positions exactly. A
/// negative scale factor flips both axes.
ObjectEstimate visibility_image(const VisibilityMap& v, const PlaneMapping& mapping);

/// Recovers the object phase phi_T(rho_o) = -[C(rho_c) - phi_in - phi_s(rho_c)
/// + phi_I(rho_o) + phi_I'(rho_o/M_I)], wrapped to (-pi, pi], on the same
/// relabeled object grid. Pixels with visibility below v_floor are masked.
ObjectEstimate phase_image(const PhaseMap& c, const VisibilityMap& v, const PhaseField& phi_s,
                           const PhaseField& phi_i, const PhaseField& phi_i_prime, double phi_in,
                           const PlaneMapping& mapping, double v_floor = 0.05);

/// Signed per-pixel difference of two rate maps sharing grid and
/// normalization.
struct SignedMap {
  FieldGrid grid;
  Eigen::ArrayXXd values;
};
SignedMap image_subtraction(const RateMap& frame_a, const RateMap& frame_b);

struct MagnificationEstimate {
  double m = 0.0;
  double uncertainty = 0.0;
  int features = 0;
};

/// Least-squares scale factor between bright-feature centroid constellations
/// of the truth mask (object plane) and a visibility map (camera plane).
/// Needs at least two separated features in each.
MagnificationEstimate measure_magnification(const ObjectMask& object_truth,
                                            const VisibilityMap& v);

}  // namespace qiup
