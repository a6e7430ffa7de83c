#include "qiup/run_config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace qiup {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": not a number: '" + t + "'");
  }
  if (pos != t.size()) throw ConfigError(what + ": trailing characters in number: '" + t + "'");
  return v;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), std::filesystem::absolute(path).parent_path());
}

RunConfig RunConfig::from_text(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig rc;
  rc.base_dir_ = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!rc.entries_.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return rc;
}

bool RunConfig::has(const std::string& key) const {
  touched_.insert(key);
  return entries_.count(key) > 0;
}

std::string RunConfig::get(const std::string& key) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key) const { return parse_number(get(key), key); }

double RunConfig::number_or(const std::string& key, double fallback) const {
  touched_.insert(key);
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number(it->second, key);
}

long long RunConfig::integer_or(const std::string& key, long long fallback) const {
  const double v = number_or(key, static_cast<double>(fallback));
  const long long n = static_cast<long long>(v);
  if (static_cast<double>(n) != v) throw ConfigError(key + ": expected an integer");
  return n;
}

std::vector<double> RunConfig::number_list(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, key));
  if (out.empty()) throw ConfigError(key + ": expected a list of numbers");
  return out;
}

std::filesystem::path RunConfig::resolve_path(const std::string& key) const {
  const std::filesystem::path p(get(key));
  return p.is_absolute() ? p : base_dir_ / p;
}

std::vector<std::string> RunConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!touched_.count(k)) out.push_back(k);
  return out;
}

}  // namespace qiup
