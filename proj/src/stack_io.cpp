#include "qiup/stack_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qiup/image_io.hpp"
#include "qiup/run_config.hpp"

namespace qiup {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string frame_basename(size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03zu", k);
  return buf;
}

}  // namespace

void write_stack(const std::filesystem::path& dir, const FringeStack& stack,
                 const std::string& config_echo) {
  if (stack.frames.empty() || stack.frames.size() != stack.ladder.size())
    throw std::invalid_argument("write_stack: frame/ladder count mismatch");
  std::filesystem::create_directories(dir);
  std::ostringstream man;
  man << "qiup-stack 1\n";
  man << "grid " << stack.grid.nx << " " << stack.grid.ny << " " << fmt(stack.grid.pitch) << "\n";
  man << "frames " << stack.frames.size() << "\n";
  man << "ladder";
  for (double v : stack.ladder) man << " " << fmt(v);
  man << "\n";
  if (stack.noise.kind == NoiseSpec::Kind::Poisson)
    man << "noise poisson " << fmt(stack.noise.scale) << " " << stack.noise.seed << "\n";
  else
    man << "noise off\n";
  man << "zero-mass-pixels " << stack.zero_mass_pixels << "\n";
  man << "clipped-fraction " << fmt(stack.clipped_fraction) << "\n";
  for (size_t k = 0; k < stack.frames.size(); ++k) {
    const Eigen::ArrayXXd& frame = stack.frames[k];
    const std::string base = frame_basename(k);
    write_matrix_text(dir / (base + ".txt"), frame);
    const double peak = frame.maxCoeff();
    const double scale = peak > 0.0 ? peak / 65535.0 : 1.0;
    write_pgm(dir / (base + ".pgm"), frame, scale, 65535);
    man << "frame " << k << " " << base << " scale " << fmt(scale) << "\n";
  }
  man << "config-begin\n" << config_echo;
  if (!config_echo.empty() && config_echo.back() != '\n') man << "\n";
  man << "config-end\n";
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error((dir / "manifest.txt").string() + ": cannot open for writing");
  out << man.str();
  if (!out) throw std::runtime_error((dir / "manifest.txt").string() + ": write failed");
}

StoredStack read_stack(const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / "manifest.txt";
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open stack manifest: " + manifest.string());
  StoredStack out;
  std::string line;
  if (!std::getline(in, line) || line != "qiup-stack 1")
    throw ConfigError(manifest.string() + ": not a stack manifest");
  size_t frames_declared = 0;
  std::vector<std::string> frame_files;
  bool in_config = false;
  std::ostringstream echo;
  while (std::getline(in, line)) {
    if (in_config) {
      if (line == "config-end") {
        in_config = false;
        continue;
      }
      echo << line << "\n";
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag.empty()) continue;
    if (tag == "grid") {
      int nx, ny;
      double pitch;
      if (!(ls >> nx >> ny >> pitch)) throw ConfigError(manifest.string() + ": malformed grid line");
      out.stack.grid = make_grid(nx, ny, pitch);
    } else if (tag == "frames") {
      ls >> frames_declared;
    } else if (tag == "ladder") {
      double v;
      while (ls >> v) out.stack.ladder.push_back(v);
    } else if (tag == "noise") {
      std::string kind;
      ls >> kind;
      if (kind == "poisson") {
        out.stack.noise.kind = NoiseSpec::Kind::Poisson;
        if (!(ls >> out.stack.noise.scale >> out.stack.noise.seed))
          throw ConfigError(manifest.string() + ": malformed noise line");
      } else if (kind != "off") {
        throw ConfigError(manifest.string() + ": unknown noise kind '" + kind + "'");
      }
    } else if (tag == "zero-mass-pixels") {
      ls >> out.stack.zero_mass_pixels;
    } else if (tag == "clipped-fraction") {
      ls >> out.stack.clipped_fraction;
    } else if (tag == "frame") {
      size_t index;
      std::string base, scale_tag;
      double scale;
      if (!(ls >> index >> base >> scale_tag >> scale) || scale_tag != "scale")
        throw ConfigError(manifest.string() + ": malformed frame line");
      if (index != frame_files.size())
        throw ConfigError(manifest.string() + ": frame lines out of order");
      frame_files.push_back(base);
    } else if (tag == "config-begin") {
      in_config = true;
    } else {
      throw ConfigError(manifest.string() + ": unknown manifest entry '" + tag + "'");
    }
  }
  out.config_echo = echo.str();
  if (out.stack.grid.nx == 0) throw ConfigError(manifest.string() + ": missing grid line");
  if (frame_files.size() != frames_declared)
    throw ConfigError(manifest.string() + ": frame count does not match declaration");
  if (out.stack.ladder.size() != frame_files.size())
    throw ConfigError(manifest.string() + ": ladder length does not match frame count");
  if (frame_files.size() < 3) throw ConfigError(manifest.string() + ": need >= 3 phase steps");
  for (const std::string& base : frame_files) {
    // exact values live in the text matrix; the PGM is a quantized preview
    Eigen::ArrayXXd frame = read_matrix_text(dir / (base + ".txt"));
    if (frame.rows() != out.stack.grid.ny || frame.cols() != out.stack.grid.nx)
      throw ConfigError(manifest.string() + ": frame " + base + " has wrong dimensions");
    out.stack.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace qiup
