#pragma once
// Plain-text run configuration: one `dotted.key = value` pair per line, `#`
// comments, values either scalars or comma-separated lists. Values keep their
// original spelling, so canonical() round-trips byte-for-byte and the FNV
// hash of a config is stable across loads.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/rng.hpp"

namespace mssk::cfg {

struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

class Config {
 public:
  static Config parse(std::string_view text) {
    Config c;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
      size_t nl = text.find('\n', pos);
      std::string_view line = text.substr(
          pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      line = detail::trim(line);
      if (line.empty() || line.front() == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw config_error("config line " + std::to_string(line_no) +
                           ": expected key = value");
      std::string key(detail::trim(line.substr(0, eq)));
      std::string val(detail::trim(line.substr(eq + 1)));
      if (key.empty())
        throw config_error("config line " + std::to_string(line_no) +
                           ": empty key");
      if (!c.kv_.emplace(key, val).second)
        throw config_error("config: duplicate key '" + key + "'");
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void set(const std::string& key, std::string value) {
    kv_[key] = std::move(value);
  }

  const std::string& get_raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw config_error("config: missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, std::string fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const {
    return parse_scalar(key, get_raw(key));
  }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  int64_t get_i64(const std::string& key) const {
    return parse_int(key, get_raw(key));
  }
  int64_t get_i64(const std::string& key, int64_t fallback) const {
    return has(key) ? get_i64(key) : fallback;
  }

  uint64_t get_u64(const std::string& key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    int64_t v = get_i64(key);
    if (v < 0) throw config_error("config: key '" + key + "' must be >= 0");
    return static_cast<uint64_t>(v);
  }

  int get_int(const std::string& key) const {
    return static_cast<int>(get_i64(key));
  }
  int get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (auto part : split_list(get_raw(key)))
      out.push_back(parse_scalar(key, std::string(part)));
    return out;
  }

  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (auto part : split_list(get_raw(key)))
      out.push_back(static_cast<int>(parse_int(key, std::string(part))));
    return out;
  }

  // sorted key = value lines; loading the output reproduces the config
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

  uint64_t hash() const { return rng::fnv1a64(canonical()); }

  std::string hash_hex() const {
    static const char* digits = "0123456789abcdef";
    uint64_t h = hash();
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = digits[h & 0xf];
      h >>= 4;
    }
    return out;
  }

 private:
  static std::vector<std::string_view> split_list(std::string_view raw) {
    std::vector<std::string_view> parts;
    size_t pos = 0;
    while (pos <= raw.size()) {
      size_t comma = raw.find(',', pos);
      std::string_view part = raw.substr(
          pos, comma == std::string_view::npos ? raw.size() - pos : comma - pos);
      parts.push_back(detail::trim(part));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return parts;
  }

  static double parse_scalar(const std::string& key, std::string_view text) {
    double v = 0.0;
    if (!num::parse_double(text, v))
      throw config_error("config: key '" + key + "' is not a number: '" +
                         std::string(text) + "'");
    return v;
  }

  static int64_t parse_int(const std::string& key, const std::string& text) {
    try {
      size_t used = 0;
      int64_t v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw config_error("config: key '" + key + "' is not an integer: '" +
                         text + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

// model.r, model.zeta, model.gamma with validation
inline model::ModelParams model_params(const Config& c) {
  model::ModelParams p;
  p.r = c.get_int("model.r");
  p.zeta = c.get_double_list("model.zeta");
  p.gamma = c.get_double_list("model.gamma");
  try {
    model::require_valid(p);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: invalid model: ") + e.what());
  }
  return p;
}

}  // namespace mssk::cfg
