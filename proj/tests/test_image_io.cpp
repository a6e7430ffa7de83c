#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "qiup/image_io.hpp"

using namespace qiup;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "qiup_io_tests";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const unsigned char* data, size_t n) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

// 3x2 8-bit grayscale PNG, rows {0,128,255} and {64,192,32}
const unsigned char kGrayPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x03, 0x00, 0x00, 0x00, 0x02, 0x08, 0x00, 0x00, 0x00, 0x00, 0xb8,
    0x1f, 0x39, 0xc6, 0x00, 0x00, 0x00, 0x10, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x60,
    0x68, 0xf8, 0xcf, 0xe0, 0x70, 0x40, 0x01, 0x00, 0x0a, 0x63, 0x02, 0xa0, 0x5b, 0x0c, 0x9b,
    0xab, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

// 2x2 RGB PNG; the grayscale reader must reject it
const unsigned char kRgbPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x08, 0x02, 0x00, 0x00, 0x00, 0xfd,
    0xd4, 0x9a, 0x73, 0x00, 0x00, 0x00, 0x12, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8,
    0xcf, 0xc0, 0xc0, 0x00, 0xc2, 0x0c, 0xff, 0x81, 0x00, 0x00, 0x1f, 0xee, 0x05, 0xfb, 0x0b,
    0xd9, 0x68, 0x8b, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

}  // namespace

TEST_CASE("8-bit pgm round trip preserves quantized levels") {
  const fs::path p = temp_dir() / "ramp8.pgm";
  Eigen::ArrayXXd values(2, 4);
  values << 0.0, 1.0 / 255.0, 128.0 / 255.0, 1.0, 37.0 / 255.0, 200.0 / 255.0, 0.0, 1.0;
  write_pgm(p, values, 1.0 / 255.0, 255);
  const Eigen::ArrayXXd back = read_gray_image(p);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 4);
  CHECK((back - values).abs().maxCoeff() == 0.0);
}

TEST_CASE("16-bit pgm round trip preserves quantized levels") {
  const fs::path p = temp_dir() / "ramp16.pgm";
  Eigen::ArrayXXd values(3, 3);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 65535);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) values(j, i) = level(rng) / 65535.0;
  write_pgm(p, values, 1.0 / 65535.0, 65535);
  const Eigen::ArrayXXd back = read_gray_image(p);
  CHECK((back - values).abs().maxCoeff() == 0.0);
}

TEST_CASE("pgm writer clamps out-of-range values") {
  const fs::path p = temp_dir() / "clamp.pgm";
  Eigen::ArrayXXd values(1, 3);
  values << -0.5, 0.5, 1.5;
  write_pgm(p, values, 1.0 / 255.0, 255);
  const Eigen::ArrayXXd back = read_gray_image(p);
  CHECK(back(0, 0) == 0.0);
  CHECK(back(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(back(0, 2) == 1.0);
}

TEST_CASE("grayscale png decodes with row 0 on top") {
  const fs::path p = temp_dir() / "gray.png";
  write_bytes(p, kGrayPng, sizeof kGrayPng);
  const Eigen::ArrayXXd img = read_gray_image(p);
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 3);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(img(0, 2) == 1.0);
  CHECK(img(1, 0) == doctest::Approx(64.0 / 255.0).epsilon(1e-12));
  CHECK(img(1, 2) == doctest::Approx(32.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("color images and unknown formats are rejected") {
  const fs::path rgb = temp_dir() / "rgb.png";
  write_bytes(rgb, kRgbPng, sizeof kRgbPng);
  CHECK_THROWS(read_gray_image(rgb));

  const fs::path junk = temp_dir() / "junk.dat";
  std::ofstream(junk) << "not an image";
  CHECK_THROWS(read_gray_image(junk));
  CHECK_THROWS(read_gray_image(temp_dir() / "does_not_exist.pgm"));
}

TEST_CASE("text matrices round-trip doubles exactly") {
  const fs::path p = temp_dir() / "mat.txt";
  Eigen::ArrayXXd values(2, 3);
  values << 1.0 / 3.0, -2.7182818284590452, 1e-300, 0.0, 6.02214076e23, -0.1;
  write_matrix_text(p, values);
  const Eigen::ArrayXXd back = read_matrix_text(p);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) CHECK(back(j, i) == values(j, i));
}

TEST_CASE("text matrix reader rejects ragged rows") {
  const fs::path p = temp_dir() / "ragged.txt";
  std::ofstream(p) << "1 2 3\n4 5\n";
  CHECK_THROWS(read_matrix_text(p));
}
