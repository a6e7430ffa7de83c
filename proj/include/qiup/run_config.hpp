#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qiup {

/// Configuration or input error: maps to process exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key-value run configuration: `key = value` lines, '#' comments,
/// sectioned key names by dot convention. Duplicate keys are rejected to keep
/// configs diff-friendly. Relative paths resolve against the config's
/// directory.
class RunConfig {
 public:
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_text(const std::string& text, const std::filesystem::path& base_dir);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long long integer_or(const std::string& key, long long fallback) const;
  std::vector<double> number_list(const std::string& key) const;
  std::filesystem::path resolve_path(const std::string& key) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// Keys present in the file but never read; used to reject typos.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> touched_;
  std::filesystem::path base_dir_;
};

double parse_number(const std::string& text, const std::string& what);

}  // namespace qiup
