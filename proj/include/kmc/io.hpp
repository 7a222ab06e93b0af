/*
 * Copyright 2026 The kmc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// Dataset loaders.
//
// CSV: comma separated numeric fields, one row per point. A first row in
// which no field parses as a number is treated as a header. The label column
// holds -1/+1, or 0/1 with 0 read as -1.
//
// Sparse: whitespace separated "<label> <idx>:<val> ..." lines with 1-based,
// strictly increasing indices. The dimension is the largest index seen and
// missing entries are zero.

#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kmc/data.hpp"
#include "kmc/error.hpp"

namespace kmc {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::optional<double> to_number(const std::string& field) {
  std::string t = trim(field);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline int to_label(double v, std::size_t line) {
  if (v == 1.0) return 1;
  if (v == -1.0 || v == 0.0) return -1;
  std::ostringstream os;
  os << "line " << line << ": unknown label value " << v;
  throw InputError(os.str());
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// label_column < 0 counts from the end (-1 is the last column).
inline LabeledSample parse_csv(std::istream& in, int label_column = -1, std::string source = {}) {
  std::vector<Vector> xs;
  std::vector<int> ys;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, ',');
    std::vector<std::optional<double>> values;
    for (const auto& f : fields) values.push_back(detail::to_number(f));
    if (first) {
      first = false;
      bool any_numeric = false;
      for (const auto& v : values) any_numeric = any_numeric || v.has_value();
      if (!any_numeric) continue;  // header
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                       std::to_string(fields.size()), lineno);
    if (width < 2) throw ParseError("need at least one feature and a label", lineno);
    const int col = label_column < 0 ? static_cast<int>(width) + label_column : label_column;
    if (col < 0 || col >= static_cast<int>(width))
      throw InputError("label column " + std::to_string(label_column) + " out of range");
    Vector x(static_cast<Eigen::Index>(width - 1));
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (!values[c]) throw ParseError("non-numeric field '" + detail::trim(fields[c]) + "'", lineno);
      if (static_cast<int>(c) == col)
        ys.push_back(detail::to_label(*values[c], lineno));
      else
        x[k++] = *values[c];
    }
    xs.push_back(std::move(x));
  }
  if (xs.empty()) throw ParseError("no data rows");
  return {std::move(xs), std::move(ys), std::move(source)};
}

inline LabeledSample load_csv(const std::string& path, int label_column = -1) {
  auto in = detail::open(path);
  return parse_csv(in, label_column, path);
}

inline LabeledSample parse_sparse(std::istream& in, std::string source = {}) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<int> ys;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    auto label = detail::to_number(tok);
    if (!label) throw ParseError("bad label '" + tok + "'", lineno);
    ys.push_back(detail::to_label(*label, lineno));
    std::vector<std::pair<std::size_t, double>> row;
    std::size_t last = 0;
    while (tokens >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected idx:val, got '" + tok + "'", lineno);
      auto idx = detail::to_number(tok.substr(0, colon));
      auto val = detail::to_number(tok.substr(colon + 1));
      if (!idx || !val || *idx < 1 || *idx != std::floor(*idx))
        throw ParseError("bad feature '" + tok + "'", lineno);
      auto i = static_cast<std::size_t>(*idx);
      if (i <= last) throw ParseError("feature indices must be strictly increasing", lineno);
      last = i;
      dim = std::max(dim, i);
      row.emplace_back(i, *val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows");
  std::vector<Vector> xs;
  xs.reserve(rows.size());
  for (const auto& row : rows) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& [i, v] : row) x[static_cast<Eigen::Index>(i - 1)] = v;
    xs.push_back(std::move(x));
  }
  return {std::move(xs), std::move(ys), std::move(source)};
}

inline LabeledSample load_sparse(const std::string& path) {
  auto in = detail::open(path);
  return parse_sparse(in, path);
}

}  // namespace kmc
