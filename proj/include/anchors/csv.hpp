/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "anchors/core.hpp"

namespace anchors {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

inline bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string_view field =
        line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
    double v = 0.0;
    if (!parse_double(field, v)) return false;
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

}  // namespace detail

/// Reads comma-separated real-valued points, one per line. The first line
/// may be a header; it is skipped when any of its fields fails to parse as
/// a number. Parse errors report the offending 1-based line number.
inline Dataset read_csv(std::istream& in, std::string_view source = "<stream>") {
  std::vector<double> values;
  std::vector<double> row;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::string line;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (!detail::parse_row(line, row)) {
      if (first_content_line) {
        first_content_line = false;  // header
        continue;
      }
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) +
                               ": malformed number");
    }
    first_content_line = false;
    if (dim == 0) {
      dim = row.size();
    } else if (row.size() != dim) {
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) + " fields, got " +
                               std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) {
    throw std::runtime_error(std::string(source) + ": no data rows");
  }
  return Dataset(std::move(values), dim);
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return read_csv(in, path);
}

/// Round-trip-exact decimal formatting.
inline std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    PointView p = data[i];
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (c) out << ',';
      out << format_double(p[c]);
    }
    out << '\n';
  }
}

inline void write_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_csv(data, out);
}

inline void write_labels_file(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (int l : labels) out << l << '\n';
}

inline std::vector<int> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed label");
    }
    labels.push_back(v);
  }
  return labels;
}

}  // namespace anchors
