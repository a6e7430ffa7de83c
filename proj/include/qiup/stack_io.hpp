#pragma once

#include <filesystem>
#include <string>

#include "qiup/interferometer.hpp"

namespace qiup {

/// On-disk fringe stack: manifest.txt plus one 16-bit PGM preview and one
/// exact float text matrix per frame. The manifest embeds the resolved config
/// so a stack is self-describing.
struct StoredStack {
  FringeStack stack;
  std::string config_echo;
};

void write_stack(const std::filesystem::path& dir, const FringeStack& stack,
                 const std::string& config_echo);
StoredStack read_stack(const std::filesystem::path& dir);

}  // namespace qiup
