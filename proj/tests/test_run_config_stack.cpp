#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "qiup/run_config.hpp"
#include "qiup/stack_io.hpp"

using namespace qiup;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* leaf) {
  const fs::path dir = fs::temp_directory_path() / leaf;
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config files parse keys, comments, and numbers") {
  const RunConfig rc = RunConfig::from_text(
      "# a comment\n"
      "camera.nx = 64\n"
      "  object.pitch =  0.25  # trailing comment\n"
      "ladder = 0 1.5 3.0\n"
      "name = two disks\n",
      "/tmp");
  CHECK(rc.has("camera.nx"));
  CHECK(rc.integer_or("camera.nx", 0) == 64);
  CHECK(rc.number("object.pitch") == 0.25);
  CHECK(rc.get("name") == "two disks");
  const std::vector<double> ladder = rc.number_list("ladder");
  REQUIRE(ladder.size() == 3);
  CHECK(ladder[1] == 1.5);
  CHECK(rc.number_or("missing", 7.0) == 7.0);
  CHECK(rc.get_or("missing", "x") == "x");
  CHECK_FALSE(rc.has("missing"));
}

TEST_CASE("config errors carry the config exit semantics") {
  CHECK_THROWS_AS(RunConfig::from_text("a = 1\na = 2\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("novalue\n", "/tmp"), ConfigError);
  const RunConfig rc = RunConfig::from_text("x = notanumber\n", "/tmp");
  CHECK_THROWS_AS(rc.number("x"), ConfigError);
  CHECK_THROWS_AS(rc.get("absent"), ConfigError);
  CHECK_THROWS_AS(rc.integer_or("x", 0), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file("/definitely/not/a/file.cfg"), ConfigError);
}

TEST_CASE("unused keys are reported for typo rejection") {
  const RunConfig rc = RunConfig::from_text("used = 1\nunused.key = 2\n", "/tmp");
  (void)rc.number("used");
  const std::vector<std::string> unused = rc.unused_keys();
  REQUIRE(unused.size() == 1);
  CHECK(unused[0] == "unused.key");
}

TEST_CASE("relative paths resolve against the config directory") {
  const fs::path dir = temp_dir("qiup_cfg_tests");
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << "mask = sub/mask.pgm\nabsolute = /a/b.pgm\n";
  const RunConfig rc = RunConfig::from_file(cfg);
  CHECK(rc.resolve_path("mask") == dir / "sub/mask.pgm");
  CHECK(rc.resolve_path("absolute") == fs::path("/a/b.pgm"));
}

TEST_CASE("fringe stacks round-trip exactly through the manifest format") {
  const fs::path dir = temp_dir("qiup_stack_tests") / "stack";
  fs::remove_all(dir);
  const FieldGrid g = make_grid(5, 4, 0.75);
  FringeStack stack;
  stack.grid = g;
  stack.ladder = {0.1, 2.2, 4.3};
  stack.zero_mass_pixels = 3;
  stack.clipped_fraction = 0.015625;
  stack.noise.kind = NoiseSpec::Kind::Poisson;
  stack.noise.scale = 1000.0;
  stack.noise.seed = 99;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 3; ++k) {
    Eigen::ArrayXXd f(g.ny, g.nx);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) f(j, i) = u(rng);
    f(0, 0) = 1.0 / 3.0;  // exercise full double round-trip
    stack.frames.push_back(std::move(f));
  }
  const std::string echo = "camera.nx = 5\nobject.amplitude = builtin:clear\n";
  write_stack(dir, stack, echo);

  const StoredStack back = read_stack(dir);
  CHECK(same_grid(back.stack.grid, g));
  REQUIRE(back.stack.frames.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK((back.stack.frames[k] == stack.frames[k]).all());
  REQUIRE(back.stack.ladder.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(back.stack.ladder[k] == stack.ladder[k]);
  CHECK(back.stack.noise.kind == NoiseSpec::Kind::Poisson);
  CHECK(back.stack.noise.scale == 1000.0);
  CHECK(back.stack.noise.seed == 99);
  CHECK(back.stack.zero_mass_pixels == 3);
  CHECK(back.stack.clipped_fraction == 0.015625);
  CHECK(back.config_echo == echo);

  // previews exist alongside the exact frames
  CHECK(fs::exists(dir / "frame_000.pgm"));
  CHECK(fs::exists(dir / "frame_000.txt"));
}

TEST_CASE("stack reading validates the directory") {
  CHECK_THROWS(read_stack(temp_dir("qiup_stack_tests") / "not_there"));
  const fs::path dir = temp_dir("qiup_stack_tests") / "broken";
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.txt") << "wrong header\n";
  CHECK_THROWS(read_stack(dir));
}
