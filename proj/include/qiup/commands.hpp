#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace qiup::cmd {

struct Options {
  std::filesystem::path config;  // run config, or the stack directory for reconstruct
  std::filesystem::path out;
  int workers = 0;
  std::optional<std::uint64_t> seed;  // overrides the config noise seed
};

// Each command returns its process exit code: 0 success, 1 verification
// failure, 2 input/config error (the CLI maps exceptions to 2).
int simulate(const Options& opts, std::ostream& log);
int reconstruct(const Options& opts, std::ostream& log);
int verify_magnification(const Options& opts, std::ostream& log);
int oracle_check(const Options& opts, std::ostream& log);

}  // namespace qiup::cmd
