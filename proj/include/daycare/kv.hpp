#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "daycare/errors.hpp"

namespace daycare {

/// Ordered `key = value` text record. Lines starting with '#' are comments.
/// Used for map configs, run configs, report summaries and verdicts.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const { return parse_double(key, get(key)); }
  std::int64_t get_int(const std::string& key) const { return parse_int(key, get(key)); }
  std::uint64_t get_u64(const std::string& key) const {
    const auto& text = get(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      throw ConfigError("key '" + key + "': expected unsigned integer, got '" + text + "'");
    return v;
  }
  bool get_bool(const std::string& key) const {
    const auto& text = get(key);
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("key '" + key + "': expected boolean, got '" + text + "'");
  }

  const std::vector<std::string>& keys() const { return order_; }

  std::string to_string() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

  static KeyValues parse(std::string_view text) {
    KeyValues kv;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValues read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PersistenceError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  /// Each line of `preamble` is written first as a '#' comment.
  void write_file(const std::string& path, const std::string& preamble = {}) const {
    std::ofstream out(path);
    if (!out) throw PersistenceError("cannot write " + path);
    std::istringstream lines(preamble);
    for (std::string line; std::getline(lines, line);) out << "# " << line << "\n";
    out << to_string();
    if (!out) throw PersistenceError("write failed: " + path);
  }

  /// Shortest round-trip representation.
  static std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
  }

  static double parse_double(const std::string& key, const std::string& text) {
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      throw ConfigError("key '" + key + "': expected number, got '" + text + "'");
    return v;
  }

  static std::int64_t parse_int(const std::string& key, const std::string& text) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      throw ConfigError("key '" + key + "': expected integer, got '" + text + "'");
    return v;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// FNV-1a over bytes; used for config and weight fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x00000100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

}  // namespace daycare
