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

// Decoding ACCDOA grids and unifying duplicated same-class outputs.
//
// Unification works per (class, frame) cell: active outputs are linked when
// their angle is below the unification threshold, linked groups (single
// linkage, tracks visited in ascending order) are replaced by their average,
// and the grouping is repeated on the averages until no two outputs of the
// cell are similar. A singleton passes through untouched.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "adpit/core.hpp"

namespace adpit {

struct InferenceConfig {
  double activity_threshold = 0.5;
  double unify_angle_deg = 30.0;

  void validate() const {
    if (!(activity_threshold > 0.0 && activity_threshold < 1.0))
      throw ContractError("activity threshold must lie in (0, 1), got " + std::to_string(activity_threshold));
    if (!(unify_angle_deg > 0.0 && unify_angle_deg < 180.0))
      throw ContractError("unification angle must lie in (0, 180), got " + std::to_string(unify_angle_deg));
  }
};

struct Detection {
  int frame = 0;
  int class_id = 0;
  Direction direction;  // unit
  double activity = 0.0;

  bool operator==(const Detection&) const = default;
};

// Raw detections and unified events share a representation.
using UnifiedEvent = Detection;

struct UnifyStats {
  int cancellations = 0;  // groups split back to singletons because their mean vanished
};

// Active outputs, ordered by (frame, class, track).
inline std::vector<Detection> decode_grid(const AccdoaGrid& grid, const InferenceConfig& cfg) {
  cfg.validate();
  std::vector<Detection> out;
  for (int t = 0; t < grid.n_frames(); ++t)
    for (int c = 0; c < grid.n_classes(); ++c)
      for (int n = 0; n < grid.n_tracks(); ++n) {
        const Direction v = grid.vector(n, c, t);
        const double a = v.norm();
        if (a > cfg.activity_threshold) out.push_back({t, c, v * (1.0 / a), a});
      }
  return out;
}

namespace detail {

struct Group {
  std::vector<int> members;  // indices into the input, ascending
  Detection value;
  bool frozen = false;
};

inline int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace detail

// Unifies detections that all belong to the same (frame, class) cell.
inline std::vector<UnifiedEvent> unify(std::span<const Detection> detections, const InferenceConfig& cfg,
                                       UnifyStats* stats = nullptr) {
  cfg.validate();
  if (detections.empty()) return {};
  for (const auto& d : detections)
    if (d.frame != detections.front().frame || d.class_id != detections.front().class_id)
      throw ContractError("unify: detections span more than one (frame, class) cell");

  std::vector<detail::Group> groups;
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) groups.push_back({{i}, detections[i], false});

  while (true) {
    const int g = static_cast<int>(groups.size());
    std::vector<int> parent(g);
    std::iota(parent.begin(), parent.end(), 0);
    bool linked = false;
    for (int i = 0; i < g; ++i)
      for (int j = i + 1; j < g; ++j) {
        if (groups[i].frozen || groups[j].frozen) continue;
        if (angle_between(groups[i].value.direction, groups[j].value.direction) < cfg.unify_angle_deg) {
          const int ri = detail::find_root(parent, i);
          const int rj = detail::find_root(parent, j);
          if (ri != rj) {
            parent[std::max(ri, rj)] = std::min(ri, rj);
            linked = true;
          }
        }
      }
    if (!linked) break;

    std::vector<detail::Group> next;
    std::vector<int> slot(g, -1);
    for (int i = 0; i < g; ++i) {
      const int r = detail::find_root(parent, i);
      if (slot[r] < 0) {
        slot[r] = static_cast<int>(next.size());
        next.push_back({{}, {}, false});
      }
      auto& dst = next[slot[r]].members;
      dst.insert(dst.end(), groups[i].members.begin(), groups[i].members.end());
    }
    std::vector<detail::Group> merged;
    for (auto& grp : next) {
      std::sort(grp.members.begin(), grp.members.end());
      if (grp.members.size() == 1) {
        grp.value = detections[grp.members.front()];
        merged.push_back(std::move(grp));
        continue;
      }
      Direction sum;
      double activity = 0.0;
      for (int m : grp.members) {
        sum += detections[m].direction * detections[m].activity;
        activity += detections[m].activity;
      }
      const double k = static_cast<double>(grp.members.size());
      const Direction mean = sum * (1.0 / k);
      if (mean.norm() < kUnitTolerance) {
        // Opposing outputs cancelled: keep every member as its own event.
        if (stats) ++stats->cancellations;
        for (int m : grp.members) merged.push_back({{m}, detections[m], true});
        continue;
      }
      grp.value = detections[grp.members.front()];
      grp.value.direction = mean.normalized();
      grp.value.activity = activity / k;
      merged.push_back(std::move(grp));
    }
    std::sort(merged.begin(), merged.end(),
              [](const detail::Group& l, const detail::Group& r) { return l.members.front() < r.members.front(); });
    groups = std::move(merged);
  }

  std::vector<UnifiedEvent> out;
  out.reserve(groups.size());
  for (auto& grp : groups) out.push_back(grp.value);
  return out;
}

// decode_grid followed by unify per (frame, class) cell.
inline std::vector<UnifiedEvent> infer(const AccdoaGrid& grid, const InferenceConfig& cfg,
                                       UnifyStats* stats = nullptr) {
  const auto raw = decode_grid(grid, cfg);
  std::vector<UnifiedEvent> out;
  std::size_t begin = 0;
  while (begin < raw.size()) {
    std::size_t end = begin + 1;
    while (end < raw.size() && raw[end].frame == raw[begin].frame && raw[end].class_id == raw[begin].class_id)
      ++end;
    const auto cell = unify(std::span<const Detection>(raw).subspan(begin, end - begin), cfg, stats);
    out.insert(out.end(), cell.begin(), cell.end());
    begin = end;
  }
  return out;
}

// Annotation rows for unified events; source ids count up from 0 within each
// (frame, class) cell.
inline std::vector<EventAnnotation> to_annotations(std::span<const UnifiedEvent> events) {
  std::vector<EventAnnotation> out;
  out.reserve(events.size());
  int source = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && (events[i].frame != events[i - 1].frame || events[i].class_id != events[i - 1].class_id))
      source = 0;
    out.push_back({events[i].frame, events[i].class_id, source++, events[i].direction});
  }
  return out;
}

}  // namespace adpit
