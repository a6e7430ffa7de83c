#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>

namespace qiup {

/// Grayscale raster loaded from PGM (P5) or PNG, scaled to [0, 1] by the
/// file's maximum representable value. Row 0 of the returned array is the
/// top image row. Color or alpha channels are rejected.
Eigen::ArrayXXd read_gray_image(const std::filesystem::path& path);

/// Writes a binary PGM. Pixel = round(values / scale), clamped to
/// [0, maxval]; maxval must be 255 or 65535 (16-bit samples are big-endian).
void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, double scale,
               int maxval = 65535);

/// Plain-text matrix, one row per line, values written with enough digits to
/// round-trip doubles exactly.
void write_matrix_text(const std::filesystem::path& path, const Eigen::ArrayXXd& values);
Eigen::ArrayXXd read_matrix_text(const std::filesystem::path& path);

}  // namespace qiup
