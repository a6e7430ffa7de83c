#include "qiup/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qiup {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

int pnm_token(std::istream& in, const std::filesystem::path& path) {
  // skips whitespace and '#' comments between header fields
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) fail(path, "malformed PGM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 30) fail(path, "PGM header value out of range");
    c = in.get();
  }
  return value;
}

Eigen::ArrayXXd read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') fail(path, "not a binary PGM");
  const int width = pnm_token(in, path);
  const int height = pnm_token(in, path);
  const int maxval = pnm_token(in, path);
  if (width < 1 || height < 1) fail(path, "empty PGM");
  if (maxval < 1 || maxval > 65535) fail(path, "unsupported PGM maxval");
  // exactly one whitespace byte separates the header from the samples
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> row(static_cast<size_t>(width) * bytes);
  Eigen::ArrayXXd out(height, width);
  // divide rather than multiply by a reciprocal: v/maxval is the exact level
  for (int j = 0; j < height; ++j) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) fail(path, "truncated PGM data");
    for (int i = 0; i < width; ++i) {
      unsigned v = bytes == 2 ? (unsigned(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
      if (v > unsigned(maxval)) fail(path, "sample exceeds maxval");
      out(j, i) = v / double(maxval);
    }
  }
  return out;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Eigen::ArrayXXd read_png(const std::filesystem::path& path) {
  PngReader r;
  r.fp = std::fopen(path.c_str(), "rb");
  if (!r.fp) fail(path, "cannot open");
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) fail(path, "libpng init failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) fail(path, "libpng decode error");
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);
  const png_uint_32 width = png_get_image_width(r.png, r.info);
  const png_uint_32 height = png_get_image_height(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  int depth = png_get_bit_depth(r.png, r.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    fail(path, "only grayscale PNG without alpha is supported");
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(r.png);
    depth = 8;
  }
  png_read_update_info(r.png, r.info);
  const size_t rowbytes = png_get_rowbytes(r.png, r.info);
  std::vector<unsigned char> row(rowbytes);
  Eigen::ArrayXXd out(height, width);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 j = 0; j < height; ++j) {
    png_read_row(r.png, row.data(), nullptr);
    for (png_uint_32 i = 0; i < width; ++i) {
      unsigned v = depth == 16 ? (unsigned(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
      out(j, i) = v / maxval;
    }
  }
  png_read_end(r.png, nullptr);
  return out;
}

}  // namespace

Eigen::ArrayXXd read_gray_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(path, "cannot open");
  unsigned char magic[8] = {};
  probe.read(reinterpret_cast<char*>(magic), 8);
  probe.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(magic, png_sig, 8) == 0) return read_png(path);
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  fail(path, "unrecognized image format (expected PGM P5 or grayscale PNG)");
}

void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, double scale,
               int maxval) {
  if (maxval != 255 && maxval != 65535) throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("write_pgm: scale must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << values.cols() << " " << values.rows() << "\n" << maxval << "\n";
  std::vector<unsigned char> row(static_cast<size_t>(values.cols()) * (maxval > 255 ? 2 : 1));
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
      double q = std::nearbyint(values(j, i) / scale);
      if (!(q > 0.0)) q = 0.0;
      if (q > maxval) q = maxval;
      const unsigned v = static_cast<unsigned>(q);
      if (maxval > 255) {
        row[2 * i] = static_cast<unsigned char>(v >> 8);
        row[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
      } else {
        row[i] = static_cast<unsigned char>(v);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(path, "write failed");
}

void write_matrix_text(const std::filesystem::path& path, const Eigen::ArrayXXd& values) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) fail(path, "cannot open for writing");
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    for (Eigen::Index i = 0; i < values.cols(); ++i)
      std::fprintf(fp, i == 0 ? "%.17g" : " %.17g", values(j, i));
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) fail(path, "write failed");
}

Eigen::ArrayXXd read_matrix_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) fail(path, "malformed numeric row");
    if (!rows.empty() && row.size() != rows.front().size()) fail(path, "ragged matrix rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path, "empty matrix file");
  Eigen::ArrayXXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index j = 0; j < out.rows(); ++j)
    for (Eigen::Index i = 0; i < out.cols(); ++i) out(j, i) = rows[j][i];
  return out;
}

}  // namespace qiup
