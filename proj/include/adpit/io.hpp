// Copyright 2026  The adpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// File formats.
//
//  Annotation CSV (UTF-8, no header), one row per event instance per frame:
//      frame,class_id,source_id,azimuth_deg,elevation_deg
//
//  Grid dump: text header line "N=<n> C=<c> T=<t>\n" followed by 3*N*C*T
//  little-endian float64 values in 3 x N x C x T row-major order.
//
//  Feature dump: text header line "F=<dim> T=<frames>\n" followed by T rows of
//  F little-endian float64 values.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "adpit/core.hpp"

namespace adpit {

static_assert(std::endian::native == std::endian::little,
              "binary dumps assume a little-endian host");

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw DataError("cannot format number");
  return std::string(buf.data(), ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, const std::string& where) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataError(where + ": cannot parse '" + std::string(field) + "'");
  return value;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline std::vector<EventAnnotation> read_annotations(std::istream& in, const std::string& name = "<stream>") {
  std::vector<EventAnnotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto fields = detail::split_csv(body);
    if (fields.size() != 5)
      throw DataError(where + ": expected 5 fields, got " + std::to_string(fields.size()));
    EventAnnotation a;
    a.frame = detail::parse_number<int>(fields[0], where);
    a.class_id = detail::parse_number<int>(fields[1], where);
    a.source_id = detail::parse_number<int>(fields[2], where);
    const double az = detail::parse_number<double>(fields[3], where);
    const double el = detail::parse_number<double>(fields[4], where);
    if (a.frame < 0) throw DataError(where + ": negative frame");
    if (a.class_id < 0) throw DataError(where + ": negative class_id");
    try {
      a.direction = direction_from_angles(az, el);
    } catch (const DomainError& e) {
      throw DataError(where + ": " + e.what());
    }
    out.push_back(a);
  }
  return out;
}

inline std::vector<EventAnnotation> read_annotations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file '" + path + "'");
  return read_annotations(in, path);
}

inline void write_annotations(std::ostream& out, std::span<const EventAnnotation> annotations) {
  for (const auto& a : annotations) {
    const Angles ang = angles_from_direction(a.direction);
    out << a.frame << ',' << a.class_id << ',' << a.source_id << ',' << format_double(ang.azimuth_deg) << ','
        << format_double(ang.elevation_deg) << '\n';
  }
}

inline void write_annotations_file(const std::string& path, std::span<const EventAnnotation> annotations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_annotations(out, annotations);
  if (!out) throw DataError("write failed for '" + path + "'");
}

// Frame count needed to hold every annotation.
inline int frames_spanned(std::span<const EventAnnotation> annotations) {
  int t = 0;
  for (const auto& a : annotations) t = std::max(t, a.frame + 1);
  return t;
}

namespace detail {

inline void write_doubles(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline void read_doubles(std::istream& in, std::span<double> values, const std::string& name) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)))
    throw DataError(name + ": truncated payload");
}

// Parses "K1=<int> K2=<int> ..." with the given keys in order.
inline std::vector<long long> parse_header(const std::string& line, std::span<const std::string_view> keys,
                                           const std::string& name) {
  std::istringstream is(line);
  std::vector<long long> values;
  for (auto key : keys) {
    std::string tok;
    if (!(is >> tok) || tok.size() <= key.size() + 1 || tok.compare(0, key.size(), key) != 0 ||
        tok[key.size()] != '=')
      throw DataError(name + ": bad header, expected " + std::string(key) + "=<int>");
    const long long v = parse_number<long long>(std::string_view(tok).substr(key.size() + 1), name);
    if (v < 0) throw DataError(name + ": negative dimension in header");
    values.push_back(v);
  }
  std::string extra;
  if (is >> extra) throw DataError(name + ": trailing header token '" + extra + "'");
  return values;
}

}  // namespace detail

inline void write_grid(std::ostream& out, const AccdoaGrid& grid) {
  out << "N=" << grid.n_tracks() << " C=" << grid.n_classes() << " T=" << grid.n_frames() << '\n';
  detail::write_doubles(out, grid.data());
}

inline AccdoaGrid read_grid(std::istream& in, const std::string& name = "<stream>") {
  std::string header;
  if (!std::getline(in, header)) throw DataError(name + ": missing grid header");
  static constexpr std::array<std::string_view, 3> keys{"N", "C", "T"};
  const auto dims = detail::parse_header(header, keys, name);
  if (dims[0] < 1 || dims[1] < 1) throw DataError(name + ": grid needs N >= 1 and C >= 1");
  AccdoaGrid grid(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  detail::read_doubles(in, grid.data(), name);
  for (double v : grid.data())
    if (!std::isfinite(v)) throw DataError(name + ": non-finite grid value");
  return grid;
}

inline void write_grid_file(const std::string& path, const AccdoaGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_grid(out, grid);
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline AccdoaGrid read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open grid file '" + path + "'");
  return read_grid(in, path);
}

// Row-major T x F feature matrix.
struct FeatureMatrix {
  int dim = 0;
  int n_frames = 0;
  std::vector<double> values;

  std::span<const double> frame(int t) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(t) * dim, dim);
  }
  std::span<double> frame(int t) {
    return std::span<double>(values).subspan(static_cast<std::size_t>(t) * dim, dim);
  }
  bool operator==(const FeatureMatrix&) const = default;
};

inline void write_features(std::ostream& out, const FeatureMatrix& f) {
  out << "F=" << f.dim << " T=" << f.n_frames << '\n';
  detail::write_doubles(out, f.values);
}

inline FeatureMatrix read_features(std::istream& in, const std::string& name = "<stream>") {
  std::string header;
  if (!std::getline(in, header)) throw DataError(name + ": missing feature header");
  static constexpr std::array<std::string_view, 2> keys{"F", "T"};
  const auto dims = detail::parse_header(header, keys, name);
  FeatureMatrix f{static_cast<int>(dims[0]), static_cast<int>(dims[1]), {}};
  f.values.resize(static_cast<std::size_t>(f.dim) * f.n_frames);
  detail::read_doubles(in, f.values, name);
  return f;
}

inline void write_features_file(const std::string& path, const FeatureMatrix& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_features(out, f);
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline FeatureMatrix read_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file '" + path + "'");
  return read_features(in, path);
}

}  // namespace adpit
