#pragma once

#include <Eigen/Core>
#include <utility>

#include "qiup/grid.hpp"
#include "qiup/sampling.hpp"

namespace qiup {

/// Spatial phase profile of one interferometer path: either a constant or a
/// sampled map interpolated bilinearly (zero outside the sampled raster).
class PhaseField {
 public:
  PhaseField() = default;
  explicit PhaseField(double constant) : constant_(constant) {}
  PhaseField(FieldGrid grid, Eigen::ArrayXXd map) : grid_(grid), map_(std::move(map)), sampled_(true) {
    if (map_.rows() != grid_.ny || map_.cols() != grid_.nx)
      throw std::invalid_argument("PhaseField: map shape does not match grid");
  }

  bool is_constant() const { return !sampled_; }
  double constant() const { return constant_; }

  double at(const Vec2& p) const {
    if (!sampled_) return constant_;
    return bilinear_at(map_, grid_, p, 0.0);
  }

  const FieldGrid& grid() const { return grid_; }
  const Eigen::ArrayXXd& map() const { return map_; }

 private:
  double constant_ = 0.0;
  FieldGrid grid_;
  Eigen::ArrayXXd map_;
  bool sampled_ = false;
};

}  // namespace qiup
