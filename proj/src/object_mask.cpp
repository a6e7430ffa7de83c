#include "qiup/object_mask.hpp"

#include <stdexcept>

#include "qiup/image_io.hpp"

namespace qiup {

ObjectMask make_mask(const FieldGrid& grid, Eigen::ArrayXXd amplitude, Eigen::ArrayXXd phase) {
  if (amplitude.rows() != grid.ny || amplitude.cols() != grid.nx)
    throw std::invalid_argument("ObjectMask: amplitude shape does not match grid");
  if (phase.size() == 0) phase = Eigen::ArrayXXd::Zero(grid.ny, grid.nx);
  if (phase.rows() != grid.ny || phase.cols() != grid.nx)
    throw std::invalid_argument("ObjectMask: phase shape does not match grid");
  if (!amplitude.isFinite().all() || !phase.isFinite().all())
    throw std::invalid_argument("ObjectMask: non-finite samples");
  if ((amplitude < 0.0).any() || (amplitude > 1.0).any())
    throw std::invalid_argument("ObjectMask: amplitude samples must lie in [0, 1]");
  return ObjectMask{grid, std::move(amplitude), std::move(phase)};
}

ObjectMask load_mask(const std::filesystem::path& amplitude_image,
                     const std::optional<std::filesystem::path>& phase_text, const FieldGrid& grid) {
  Eigen::ArrayXXd amp = read_gray_image(amplitude_image);
  if (amp.rows() != grid.ny || amp.cols() != grid.nx)
    throw std::invalid_argument("load_mask: amplitude raster dimensions do not match grid");
  Eigen::ArrayXXd phase;
  if (phase_text) {
    phase = read_matrix_text(*phase_text);
    if (phase.rows() != amp.rows() || phase.cols() != amp.cols())
      throw std::invalid_argument("load_mask: phase raster dimensions differ from amplitude image");
  }
  return make_mask(grid, std::move(amp), std::move(phase));
}

}  // namespace qiup
