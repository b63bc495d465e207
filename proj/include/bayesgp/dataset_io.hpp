#pragma once

#include <bayesgp/errors.hpp>
#include <bayesgp/types.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bayesgp {

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

/// Comma-separated text with one header row. The first `input_columns` columns
/// are inputs, the next one is the output; further columns are ignored. Bounds
/// are the per-column min / max. When `input_columns` is 0 every column but
/// the last is an input.
inline Dataset read_dataset(std::istream& in, std::size_t input_columns = 0) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw TooFewColumns("dataset is empty, expected a header row", 1);
  ++line_no;
  const std::size_t header_fields = detail::split_commas(detail::trim(line)).size();
  if (input_columns == 0) {
    if (header_fields < 2) throw TooFewColumns("need at least one input and one output column", 1);
    input_columns = header_fields - 1;
  }
  if (header_fields < input_columns + 1) {
    throw TooFewColumns("header has " + std::to_string(header_fields) + " columns, need " +
                            std::to_string(input_columns + 1),
                        1);
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split_commas(trimmed);
    if (fields.size() != header_fields) {
      throw MalformedRow("expected " + std::to_string(header_fields) + " fields, found " +
                             std::to_string(fields.size()),
                         line_no);
    }
    for (std::size_t c = 0; c <= input_columns; ++c) {
      const std::string_view field = detail::trim(fields[c]);
      if (field.empty()) {
        throw MalformedRow("missing value in column " + std::to_string(c + 1), line_no);
      }
      const auto v = detail::parse_double(field);
      if (!v || !std::isfinite(*v)) {
        throw NonNumericField("column " + std::to_string(c + 1) + " is not a number: '" +
                                  std::string(field) + "'",
                              line_no);
      }
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0) throw MalformedRow("dataset has a header but no data rows", line_no);

  const auto n = static_cast<Eigen::Index>(rows);
  const auto d = static_cast<Eigen::Index>(input_columns);
  Matrix X(n, d);
  Vector y(n);
  const std::size_t stride = input_columns + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * stride;
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = values[base + static_cast<std::size_t>(j)];
    y[i] = values[base + input_columns];
  }
  return Dataset(std::move(X), y);
}

inline Dataset load_dataset(const std::filesystem::path& path, std::size_t input_columns = 0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path.string() + "'");
  return read_dataset(in, input_columns);
}

}  // namespace bayesgp
