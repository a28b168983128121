#pragma once

// String helpers shared by the config and trace readers.

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "mwsla/errors.hpp"

namespace mwsla::text {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Decimal, or a ratio "a/b" such as "1/3".
inline double parse_real(std::string_view s, const std::string& field) {
  double value = 0.0;
  if (parse_double(s, value)) return value;
  const auto slash = s.find('/');
  double num = 0.0, den = 0.0;
  if (slash != std::string_view::npos && parse_double(s.substr(0, slash), num) &&
      parse_double(s.substr(slash + 1), den) && den != 0.0) {
    return num / den;
  }
  throw ConfigError(field + ": not a number: '" + std::string(trim(s)) + "'");
}

inline std::size_t parse_count(std::string_view s, const std::string& field) {
  s = trim(s);
  std::size_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(field + ": not a non-negative integer: '" + std::string(s) + "'");
  }
  return value;
}

inline std::vector<double> parse_real_list(std::string_view s, const std::string& field) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(parse_real(part, field));
  return out;
}

}  // namespace mwsla::text
