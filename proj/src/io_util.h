#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ndbench/errors.h"

namespace ndbench::detail {

inline std::ifstream open_binary_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot open file: " + path);
  return f;
}

inline std::ofstream open_binary_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot create file: " + path);
  return f;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f = open_binary_in(path);
  std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw input_error("read error: " + path);
  return out;
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream f = open_binary_out(path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw input_error("write error: " + path);
}

/// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw input_error("invalid number '" + std::string(s) + "' in " + what);
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw input_error("invalid integer '" + std::string(s) + "' in " + what);
  return v;
}

/// Splits one line on commas. The fixed file formats never quote cells.
inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Splits text into lines; accepts LF and CRLF; drops one trailing empty line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    std::string_view line;
    if (pos == std::string_view::npos) {
      line = text.substr(start);
      start = text.size() + 1;
    } else {
      line = text.substr(start, pos - start);
      start = pos + 1;
    }
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

// Little-endian binary primitives. Host is assumed little-endian (checked at
// file-format read/write entry points via static_assert on x86/arm64 builds).

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw input_error("truncated file: " + path);
  return v;
}

}  // namespace ndbench::detail
