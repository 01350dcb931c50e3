#pragma once
// Artifact output: CSV tables, a minimal JSON object writer, and write-once
// file semantics. Writing an identical file twice is a no-op; writing
// different content to an existing path is an error, so artifacts keyed by
// config hash can never be silently clobbered.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mssk/numeric.hpp"

namespace mssk::io {

struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto emit_row = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw io_error("csv row width does not match header");
    emit_row(row);
  }
  return out;
}

// ordered flat JSON object; doubles are shortest-round-trip formatted
class JsonWriter {
 public:
  JsonWriter& field(std::string_view key, double v) {
    return raw(key, num::format_double(v));
  }
  JsonWriter& field(std::string_view key, int64_t v) {
    return raw(key, std::to_string(v));
  }
  JsonWriter& field(std::string_view key, uint64_t v) {
    return raw(key, std::to_string(v));
  }
  JsonWriter& field(std::string_view key, int v) {
    return field(key, static_cast<int64_t>(v));
  }
  JsonWriter& field(std::string_view key, bool v) {
    return raw(key, v ? "true" : "false");
  }
  JsonWriter& field(std::string_view key, std::string_view v) {
    return raw(key, quote(v));
  }
  JsonWriter& field_array(std::string_view key, const std::vector<double>& v) {
    std::string arr = "[";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) arr += ',';
      arr += num::format_double(v[i]);
    }
    arr += ']';
    return raw(key, arr);
  }
  JsonWriter& raw(std::string_view key, std::string_view value) {
    body_ += first_ ? "" : ",";
    first_ = false;
    body_ += '\n';
    body_ += "  ";
    body_ += quote(key);
    body_ += ": ";
    body_ += value;
    return *this;
  }
  std::string finish() const { return "{" + body_ + "\n}\n"; }

  static std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
          } else {
            out += c;
          }
      }
    }
    out += '"';
    return out;
  }

 private:
  std::string body_;
  bool first_ = true;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// write-once: identical rewrite is a no-op, conflicting rewrite an error
inline void write_once(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (fs::exists(p)) {
    if (read_file(path) == content) return;
    throw io_error("refusing to overwrite '" + path +
                   "' with different content");
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

}  // namespace mssk::io
