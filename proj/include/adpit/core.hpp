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

// Domain types for the single- and multi-ACCDOA output formats and the
// encoders that turn event annotations into reference grids.
//
// An ACCDOA vector couples activity and direction: its length is the activity
// and its orientation the Cartesian DOA. A reference vector is either a unit
// vector (active) or the zero vector (inactive).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adpit/errors.hpp"

namespace adpit {

inline constexpr double kUnitTolerance = 1e-9;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Direction {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double dot(const Direction& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool is_zero() const { return x == 0.0 && y == 0.0 && z == 0.0; }
  bool is_unit(double tol = kUnitTolerance) const {
    return std::abs(norm() - 1.0) <= tol;
  }
  Direction normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize a zero-norm vector");
    return {x / n, y / n, z / n};
  }

  Direction operator+(const Direction& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Direction operator-(const Direction& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Direction operator*(double s) const { return {x * s, y * s, z * s}; }
  Direction& operator+=(const Direction& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Direction&) const = default;
};

inline Direction cross(const Direction& a, const Direction& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Spherical to Cartesian, azimuth measured counter-clockwise from +x in the
// horizontal plane, elevation up from the horizontal plane.
inline Direction direction_from_angles(double azimuth_deg, double elevation_deg) {
  if (!(azimuth_deg >= -180.0 && azimuth_deg <= 180.0))
    throw DomainError("azimuth out of [-180, 180]: " + std::to_string(azimuth_deg));
  if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0))
    throw DomainError("elevation out of [-90, 90]: " + std::to_string(elevation_deg));
  const double az = deg_to_rad(azimuth_deg);
  const double el = deg_to_rad(elevation_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

struct Angles {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

inline Angles angles_from_direction(const Direction& d) {
  const Direction u = d.normalized();
  return {rad_to_deg(std::atan2(u.y, u.x)),
          rad_to_deg(std::asin(std::clamp(u.z, -1.0, 1.0)))};
}

// Angle in degrees, in [0, 180].
inline double angle_between(const Direction& a, const Direction& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw DomainError("angle_between: zero-norm direction");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

struct EventAnnotation {
  int frame = 0;
  int class_id = 0;
  int source_id = 0;
  Direction direction;

  bool operator==(const EventAnnotation&) const = default;
};

// Dense 3 x N x C x T tensor, stored row-major in that order, so component k
// of the vector at (n, c, t) lives at ((k * N + n) * C + c) * T + t.
class AccdoaGrid {
 public:
  AccdoaGrid() = default;
  AccdoaGrid(int n_tracks, int n_classes, int n_frames)
      : n_tracks_(n_tracks), n_classes_(n_classes), n_frames_(n_frames) {
    if (n_tracks < 1 || n_classes < 1 || n_frames < 0)
      throw ContractError("AccdoaGrid: invalid shape N=" + std::to_string(n_tracks) +
                          " C=" + std::to_string(n_classes) +
                          " T=" + std::to_string(n_frames));
    data_.assign(std::size_t{3} * n_tracks * n_classes * n_frames, 0.0);
  }

  int n_tracks() const { return n_tracks_; }
  int n_classes() const { return n_classes_; }
  int n_frames() const { return n_frames_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int axis, int n, int c, int t) const {
    return ((static_cast<std::size_t>(axis) * n_tracks_ + n) * n_classes_ + c) * n_frames_ + t;
  }
  double& at(int axis, int n, int c, int t) { return data_[index(axis, n, c, t)]; }
  double at(int axis, int n, int c, int t) const { return data_[index(axis, n, c, t)]; }

  Direction vector(int n, int c, int t) const {
    return {at(0, n, c, t), at(1, n, c, t), at(2, n, c, t)};
  }
  void set_vector(int n, int c, int t, const Direction& d) {
    at(0, n, c, t) = d.x;
    at(1, n, c, t) = d.y;
    at(2, n, c, t) = d.z;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const AccdoaGrid& o) const {
    return n_tracks_ == o.n_tracks_ && n_classes_ == o.n_classes_ && n_frames_ == o.n_frames_;
  }
  std::string shape_string() const {
    return "3x" + std::to_string(n_tracks_) + "x" + std::to_string(n_classes_) + "x" +
           std::to_string(n_frames_);
  }

  bool operator==(const AccdoaGrid&) const = default;

 private:
  int n_tracks_ = 1;
  int n_classes_ = 1;
  int n_frames_ = 0;
  std::vector<double> data_;
};

// M_ct: number of simultaneously active same-class events per (class, frame).
class FrameActivityIndex {
 public:
  FrameActivityIndex() = default;
  FrameActivityIndex(int n_classes, int n_frames)
      : n_classes_(n_classes), n_frames_(n_frames),
        counts_(static_cast<std::size_t>(n_classes) * n_frames, 0) {}

  int n_classes() const { return n_classes_; }
  int n_frames() const { return n_frames_; }
  int operator()(int c, int t) const { return counts_[static_cast<std::size_t>(c) * n_frames_ + t]; }
  int& operator()(int c, int t) { return counts_[static_cast<std::size_t>(c) * n_frames_ + t]; }

  // Total active events across classes at frame t.
  int frame_total(int t) const {
    int total = 0;
    for (int c = 0; c < n_classes_; ++c) total += (*this)(c, t);
    return total;
  }

  bool operator==(const FrameActivityIndex&) const = default;

 private:
  int n_classes_ = 0;
  int n_frames_ = 0;
  std::vector<int> counts_;
};

// Reference grid plus the occupancy mask telling which slots hold original
// targets. Occupied slots are exactly unit, unoccupied ones exactly zero.
struct EncodedReference {
  AccdoaGrid grid;
  std::vector<std::uint8_t> occupied;  // N x C x T, same ordering as the grid
  FrameActivityIndex activity;

  bool is_occupied(int n, int c, int t) const {
    return occupied[(static_cast<std::size_t>(n) * grid.n_classes() + c) * grid.n_frames() + t] != 0;
  }
  void set_occupied(int n, int c, int t, bool v) {
    occupied[(static_cast<std::size_t>(n) * grid.n_classes() + c) * grid.n_frames() + t] = v ? 1 : 0;
  }
  // Original target directions at (c, t), in ascending track order.
  std::vector<Direction> targets(int c, int t) const {
    std::vector<Direction> out;
    for (int n = 0; n < grid.n_tracks(); ++n)
      if (is_occupied(n, c, t)) out.push_back(grid.vector(n, c, t));
    return out;
  }
};

namespace detail {

inline void check_annotation(const EventAnnotation& a, int n_classes, int n_frames) {
  if (a.frame < 0 || a.frame >= n_frames)
    throw ContractError("annotation frame " + std::to_string(a.frame) + " outside [0, " +
                        std::to_string(n_frames) + ")");
  if (a.class_id < 0 || a.class_id >= n_classes)
    throw ContractError("annotation class " + std::to_string(a.class_id) + " outside [0, " +
                        std::to_string(n_classes) + ")");
  if (!a.direction.is_unit())
    throw DomainError("annotation direction is not unit length (frame " + std::to_string(a.frame) +
                      ", class " + std::to_string(a.class_id) + ")");
}

// Annotations grouped per (class, frame) cell, each cell sorted by source_id.
inline std::vector<std::vector<const EventAnnotation*>> bucket_by_cell(
    std::span<const EventAnnotation> annotations, int n_classes, int n_frames) {
  std::vector<std::vector<const EventAnnotation*>> cells(static_cast<std::size_t>(n_classes) * n_frames);
  for (const auto& a : annotations) {
    check_annotation(a, n_classes, n_frames);
    cells[static_cast<std::size_t>(a.class_id) * n_frames + a.frame].push_back(&a);
  }
  for (auto& cell : cells) {
    std::sort(cell.begin(), cell.end(),
              [](const EventAnnotation* l, const EventAnnotation* r) { return l->source_id < r->source_id; });
    for (std::size_t i = 1; i < cell.size(); ++i)
      if (cell[i]->source_id == cell[i - 1]->source_id)
        throw ContractError("duplicate source_id " + std::to_string(cell[i]->source_id) +
                            " at frame " + std::to_string(cell[i]->frame) + ", class " +
                            std::to_string(cell[i]->class_id));
  }
  return cells;
}

}  // namespace detail

// Multi-ACCDOA reference: the M_ct events of each (c, t) fill tracks
// 0..M_ct-1 in ascending source_id order; the rest stay zero.
inline EncodedReference encode_multi_accdoa(std::span<const EventAnnotation> annotations,
                                            int n_tracks, int n_classes, int n_frames) {
  EncodedReference ref{AccdoaGrid(n_tracks, n_classes, n_frames),
                       std::vector<std::uint8_t>(static_cast<std::size_t>(n_tracks) * n_classes * n_frames, 0),
                       FrameActivityIndex(n_classes, n_frames)};
  const auto cells = detail::bucket_by_cell(annotations, n_classes, n_frames);
  for (int c = 0; c < n_classes; ++c) {
    for (int t = 0; t < n_frames; ++t) {
      const auto& cell = cells[static_cast<std::size_t>(c) * n_frames + t];
      if (static_cast<int>(cell.size()) > n_tracks)
        throw CapacityError("class " + std::to_string(c) + " at frame " + std::to_string(t) + " has " +
                            std::to_string(cell.size()) + " simultaneous events, format holds " +
                            std::to_string(n_tracks));
      for (std::size_t i = 0; i < cell.size(); ++i) {
        ref.grid.set_vector(static_cast<int>(i), c, t, cell[i]->direction);
        ref.set_occupied(static_cast<int>(i), c, t, true);
      }
      ref.activity(c, t) = static_cast<int>(cell.size());
    }
  }
  return ref;
}

struct SingleAccdoaEncoding {
  AccdoaGrid grid;         // N = 1
  std::size_t dropped = 0;  // same-class collisions that could not be represented
};

// Single-ACCDOA reference. Colliding same-class events keep the lowest
// source_id; the others are counted as dropped.
inline SingleAccdoaEncoding encode_single_accdoa(std::span<const EventAnnotation> annotations,
                                                 int n_classes, int n_frames) {
  SingleAccdoaEncoding out{AccdoaGrid(1, n_classes, n_frames), 0};
  const auto cells = detail::bucket_by_cell(annotations, n_classes, n_frames);
  for (int c = 0; c < n_classes; ++c) {
    for (int t = 0; t < n_frames; ++t) {
      const auto& cell = cells[static_cast<std::size_t>(c) * n_frames + t];
      if (cell.empty()) continue;
      out.grid.set_vector(0, c, t, cell.front()->direction);
      out.dropped += cell.size() - 1;
    }
  }
  return out;
}

// Wraps a single-ACCDOA grid as an N = 1 reference so it can go through the
// same loss code as the multi format.
inline EncodedReference single_as_reference(const AccdoaGrid& single) {
  EncodedReference ref{single,
                       std::vector<std::uint8_t>(static_cast<std::size_t>(single.n_classes()) * single.n_frames(), 0),
                       FrameActivityIndex(single.n_classes(), single.n_frames())};
  for (int c = 0; c < single.n_classes(); ++c)
    for (int t = 0; t < single.n_frames(); ++t)
      if (!single.vector(0, c, t).is_zero()) {
        ref.set_occupied(0, c, t, true);
        ref.activity(c, t) = 1;
      }
  return ref;
}

}  // namespace adpit
