#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fmhom {

/// Shortest form that is still bit-exact: 17 significant digits, '.' decimal
/// separator regardless of locale.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Strict number parse: the whole field must be consumed.
inline bool parse_double(const std::string& field, double& out) {
  if (field.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(field, &used);
  } catch (...) {
    return false;
  }
  return used == field.size();
}

inline bool parse_int64(const std::string& field, long long& out) {
  if (field.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stoll(field, &used);
  } catch (...) {
    return false;
  }
  return used == field.size();
}

/// Writes one CSV row of already formatted fields, newline terminated.
inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << fields[i];
  }
  os << '\n';
}

}  // namespace fmhom
