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

// Track-to-target assignment sets for the three frame-level PIT variants.
//
// An Assignment lists, for each output track, the index of the target it is
// trained against, or kZeroTarget for the zero vector. For the class-wise
// variants target indices refer to the M_ct original targets of one
// (class, frame) cell; for the non-class-wise variant they refer to the
// events of a whole frame packed in (class_id, source_id) order.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adpit/errors.hpp"

namespace adpit {

enum class PitVariant { NonClassWise, ClassWise, ClassWiseAdpit };

inline constexpr int kMaxEnumeratedTracks = 6;
inline constexpr int kZeroTarget = -1;

using Assignment = std::vector<int>;

inline std::string_view variant_name(PitVariant v) {
  switch (v) {
    case PitVariant::NonClassWise: return "nonclass";
    case PitVariant::ClassWise: return "class";
    case PitVariant::ClassWiseAdpit: return "adpit";
  }
  return "?";
}

inline PitVariant parse_variant(std::string_view s) {
  if (s == "nonclass") return PitVariant::NonClassWise;
  if (s == "class") return PitVariant::ClassWise;
  if (s == "adpit") return PitVariant::ClassWiseAdpit;
  throw ContractError("unknown PIT variant '" + std::string(s) + "' (expected nonclass, class or adpit)");
}

namespace detail {

inline void check_tracks(int n_tracks) {
  if (n_tracks < 1) throw ContractError("track count must be >= 1");
  if (n_tracks > kMaxEnumeratedTracks)
    throw CapacityError("exhaustive permutation enumeration supports at most " +
                        std::to_string(kMaxEnumeratedTracks) + " tracks, got " + std::to_string(n_tracks));
}

inline void check_targets(int n_tracks, int n_targets) {
  if (n_targets < 0 || n_targets > n_tracks)
    throw DomainError("target count " + std::to_string(n_targets) + " outside [0, " + std::to_string(n_tracks) +
                      "]");
}

inline std::vector<Assignment> dedup_in_order(const std::vector<Assignment>& raw) {
  std::set<Assignment> seen;
  std::vector<Assignment> out;
  for (const auto& a : raw)
    if (seen.insert(a).second) out.push_back(a);
  return out;
}

}  // namespace detail

// K_ct: raw number of ADPIT assignments, P(N, M) * M^(N - M), or 1 for M = 0.
inline std::uint64_t permutation_count_adpit(int n_tracks, int m_active) {
  if (n_tracks < 0 || m_active < 0 || m_active > n_tracks)
    throw DomainError("permutation_count_adpit: need 0 <= M <= N, got N=" + std::to_string(n_tracks) +
                      " M=" + std::to_string(m_active));
  if (m_active == 0) return 1;
  std::uint64_t k = 1;
  for (int i = 0; i < m_active; ++i) k *= static_cast<std::uint64_t>(n_tracks - i);
  for (int i = 0; i < n_tracks - m_active; ++i) k *= static_cast<std::uint64_t>(m_active);
  return k;
}

struct RawAdpitAssignment {
  Assignment targets;
  std::vector<bool> duplicated;  // true where the track carries a duplicate
};

// All K_ct raw ADPIT assignments: first an ordered placement of the M
// originals on distinct tracks, then a duplicate choice for every remaining
// track. Both stages are enumerated lexicographically.
inline std::vector<RawAdpitAssignment> raw_adpit_assignments(int n_tracks, int m_active) {
  detail::check_tracks(n_tracks);
  detail::check_targets(n_tracks, m_active);
  std::vector<RawAdpitAssignment> out;
  if (m_active == 0) {
    out.push_back({Assignment(n_tracks, kZeroTarget), std::vector<bool>(n_tracks, false)});
    return out;
  }

  std::vector<int> placement(m_active);  // placement[i] = track of original i
  std::vector<bool> used(n_tracks, false);
  auto emit_duplicates = [&] {
    std::vector<int> free_tracks;
    for (int n = 0; n < n_tracks; ++n)
      if (!used[n]) free_tracks.push_back(n);
    std::vector<int> choice(free_tracks.size(), 0);
    while (true) {
      RawAdpitAssignment a{Assignment(n_tracks, kZeroTarget), std::vector<bool>(n_tracks, false)};
      for (int i = 0; i < m_active; ++i) a.targets[placement[i]] = i;
      for (std::size_t j = 0; j < free_tracks.size(); ++j) {
        a.targets[free_tracks[j]] = choice[j];
        a.duplicated[free_tracks[j]] = true;
      }
      out.push_back(std::move(a));
      // odometer over the duplicate choices, last free track fastest
      int pos = static_cast<int>(choice.size()) - 1;
      while (pos >= 0 && ++choice[pos] == m_active) choice[pos--] = 0;
      if (pos < 0) break;
    }
  };
  auto place = [&](auto&& self, int i) -> void {
    if (i == m_active) {
      emit_duplicates();
      return;
    }
    for (int n = 0; n < n_tracks; ++n) {
      if (used[n]) continue;
      used[n] = true;
      placement[i] = n;
      self(self, i + 1);
      used[n] = false;
    }
  };
  place(place, 0);
  return out;
}

// Distinct assignments for one cell (class-wise) or one frame (non-class-wise)
// with n_targets original targets, in generation order. Two assignments are
// the same when they produce the same target tensor: zero slots are
// interchangeable and so are an original and its duplicate.
inline std::vector<Assignment> generate_assignments(PitVariant variant, int n_tracks, int n_targets) {
  detail::check_tracks(n_tracks);
  detail::check_targets(n_tracks, n_targets);
  if (variant == PitVariant::ClassWiseAdpit) {
    std::vector<Assignment> raw;
    for (auto& r : raw_adpit_assignments(n_tracks, n_targets)) raw.push_back(std::move(r.targets));
    return detail::dedup_in_order(raw);
  }
  // Plain PIT: permute originals and zero vectors over the tracks.
  std::vector<int> perm(n_tracks);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Assignment> raw;
  do {
    Assignment a(n_tracks);
    for (int n = 0; n < n_tracks; ++n) a[n] = perm[n] < n_targets ? perm[n] : kZeroTarget;
    raw.push_back(std::move(a));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return detail::dedup_in_order(raw);
}

// Assignment lists for every target count 0..N of one variant and track count.
class PermutationTable {
 public:
  PermutationTable(PitVariant variant, int n_tracks) : variant_(variant), n_tracks_(n_tracks) {
    detail::check_tracks(n_tracks);
    for (int m = 0; m <= n_tracks; ++m) lists_.push_back(generate_assignments(variant, n_tracks, m));
  }

  PitVariant variant() const { return variant_; }
  int n_tracks() const { return n_tracks_; }
  const std::vector<Assignment>& for_targets(int m) const {
    if (m < 0 || m > n_tracks_)
      throw CapacityError(std::to_string(m) + " simultaneous targets exceed " + std::to_string(n_tracks_) +
                          " tracks");
    return lists_[m];
  }

 private:
  PitVariant variant_;
  int n_tracks_;
  std::vector<std::vector<Assignment>> lists_;
};

inline std::string format_assignment(const Assignment& a) {
  std::string s;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (n) s += ' ';
    s += a[n] == kZeroTarget ? std::string("-") : std::to_string(a[n]);
  }
  return s;
}

}  // namespace adpit
