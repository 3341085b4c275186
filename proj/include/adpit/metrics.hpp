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

// SELD metrics: location-dependent ER/F (20 degrees), class-dependent LE/LR,
// the aggregate SELD error, and LR split by same-class overlap.
//
// References and predictions are paired per (frame, class) cell by the
// minimum-total-angle assignment. LE and LR use every pair regardless of
// distance; ER and F count a pair as a true positive only below the spatial
// threshold. All sums are micro-averaged over cells. Undefined metrics are
// empty optionals, never zero.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adpit/core.hpp"

namespace adpit {

struct MatchConfig {
  double spatial_threshold_deg = 20.0;
  int segment_frames = 10;

  void validate() const {
    if (!(spatial_threshold_deg > 0.0 && spatial_threshold_deg <= 180.0))
      throw ContractError("spatial threshold must lie in (0, 180]");
    if (segment_frames < 1) throw ContractError("segment length must be >= 1 frame");
  }
};

struct MatchedPair {
  int ref = 0;
  int pred = 0;
  double angle_deg = 0.0;
};

struct Matching {
  std::vector<MatchedPair> pairs;  // ascending ref index
  std::vector<int> unmatched_refs;
  std::vector<int> unmatched_preds;
  double total_angle_deg = 0.0;
};

namespace detail {

// Square min-cost assignment (shortest augmenting path with potentials).
// Returns row -> column.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline constexpr std::size_t kExhaustiveMatchLimit = 4;

}  // namespace detail

// Optimal injective pairing of min(|refs|, |preds|) pairs. Small cells are
// enumerated exhaustively (first minimum in lexicographic order wins), larger
// ones go through the assignment solver.
inline Matching match_frame_class(std::span<const Direction> refs, std::span<const Direction> preds) {
  const int nr = static_cast<int>(refs.size());
  const int np = static_cast<int>(preds.size());
  std::vector<std::vector<double>> angle(nr, std::vector<double>(np, 0.0));
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < np; ++j) angle[i][j] = angle_between(refs[i], preds[j]);

  std::vector<int> ref_to_pred(nr, -1);
  if (std::max(refs.size(), preds.size()) <= detail::kExhaustiveMatchLimit) {
    // Enumerate injections from the smaller side into the larger side.
    const bool refs_small = nr <= np;
    const int small = refs_small ? nr : np;
    const int large = refs_small ? np : nr;
    std::vector<int> current(small, -1), best;
    std::vector<bool> used(large, false);
    double best_cost = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, int i, double acc) -> void {
      if (i == small) {
        if (acc < best_cost) {
          best_cost = acc;
          best = current;
        }
        return;
      }
      for (int j = 0; j < large; ++j) {
        if (used[j]) continue;
        used[j] = true;
        current[i] = j;
        self(self, i + 1, acc + (refs_small ? angle[i][j] : angle[j][i]));
        used[j] = false;
      }
    };
    rec(rec, 0, 0.0);
    for (int i = 0; i < small; ++i) {
      if (refs_small)
        ref_to_pred[i] = best[i];
      else
        ref_to_pred[best[i]] = i;
    }
  } else {
    const int n = std::max(nr, np);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < np; ++j) cost[i][j] = angle[i][j];
    const auto row_to_col = detail::solve_assignment(cost);
    for (int i = 0; i < nr; ++i)
      if (row_to_col[i] < np) ref_to_pred[i] = row_to_col[i];
  }

  Matching m;
  std::vector<bool> pred_used(np, false);
  for (int i = 0; i < nr; ++i) {
    if (ref_to_pred[i] < 0) {
      m.unmatched_refs.push_back(i);
      continue;
    }
    m.pairs.push_back({i, ref_to_pred[i], angle[i][ref_to_pred[i]]});
    m.total_angle_deg += angle[i][ref_to_pred[i]];
    pred_used[ref_to_pred[i]] = true;
  }
  for (int j = 0; j < np; ++j)
    if (!pred_used[j]) m.unmatched_preds.push_back(j);
  return m;
}

// Matching outcome of one (frame, class) cell.
struct CellMatch {
  int frame = 0;
  int class_id = 0;
  int n_refs = 0;
  int n_preds = 0;
  std::vector<double> angles;  // one per matched pair
};

// Pairs references and predictions cell by cell, cells ordered by (frame, class).
inline std::vector<CellMatch> match_cells(std::span<const EventAnnotation> refs,
                                          std::span<const EventAnnotation> preds) {
  std::map<std::pair<int, int>, std::pair<std::vector<Direction>, std::vector<Direction>>> cells;
  for (const auto& r : refs) cells[{r.frame, r.class_id}].first.push_back(r.direction);
  for (const auto& p : preds) cells[{p.frame, p.class_id}].second.push_back(p.direction);
  std::vector<CellMatch> out;
  out.reserve(cells.size());
  for (const auto& [key, dirs] : cells) {
    CellMatch cm{key.first, key.second, static_cast<int>(dirs.first.size()), static_cast<int>(dirs.second.size()), {}};
    const Matching m = match_frame_class(dirs.first, dirs.second);
    for (const auto& p : m.pairs) cm.angles.push_back(p.angle_deg);
    out.push_back(std::move(cm));
  }
  return out;
}

struct LocalizationScores {
  std::optional<double> le_cd;
  std::optional<double> lr_cd;
  std::size_t n_refs = 0;
  std::size_t n_matched = 0;
};

inline LocalizationScores localization_metrics(std::span<const CellMatch> cells) {
  LocalizationScores s;
  double angle_sum = 0.0;
  for (const auto& c : cells) {
    s.n_refs += static_cast<std::size_t>(c.n_refs);
    s.n_matched += c.angles.size();
    for (double a : c.angles) angle_sum += a;
  }
  if (s.n_matched > 0) s.le_cd = angle_sum / static_cast<double>(s.n_matched);
  if (s.n_refs > 0) s.lr_cd = static_cast<double>(s.n_matched) / static_cast<double>(s.n_refs);
  return s;
}

struct DetectionScores {
  std::optional<double> er20;
  std::optional<double> f20;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
};

inline DetectionScores detection_metrics(std::span<const CellMatch> cells, const MatchConfig& cfg) {
  cfg.validate();
  DetectionScores s;
  struct SegmentCounts {
    std::size_t fn = 0, fp = 0, n_ref = 0;
  };
  std::map<int, SegmentCounts> segments;
  for (const auto& c : cells) {
    std::size_t tp = 0;
    for (double a : c.angles)
      if (a < cfg.spatial_threshold_deg) ++tp;
    const std::size_t fp = static_cast<std::size_t>(c.n_preds) - tp;
    const std::size_t fn = static_cast<std::size_t>(c.n_refs) - tp;
    s.tp += tp;
    s.fp += fp;
    s.fn += fn;
    auto& seg = segments[c.frame / cfg.segment_frames];
    seg.fn += fn;
    seg.fp += fp;
    seg.n_ref += static_cast<std::size_t>(c.n_refs);
  }
  std::size_t n_ref = 0;
  for (const auto& [index, seg] : segments) {
    s.substitutions += std::min(seg.fn, seg.fp);
    s.deletions += seg.fn > seg.fp ? seg.fn - seg.fp : 0;
    s.insertions += seg.fp > seg.fn ? seg.fp - seg.fn : 0;
    n_ref += seg.n_ref;
  }
  if (n_ref > 0)
    s.er20 = static_cast<double>(s.substitutions + s.deletions + s.insertions) / static_cast<double>(n_ref);
  const std::size_t denom = 2 * s.tp + s.fp + s.fn;
  if (denom > 0) s.f20 = 2.0 * static_cast<double>(s.tp) / static_cast<double>(denom);
  return s;
}

// Aggregate error (ER + (1 - F) + LE / 180 + (1 - LR)) / 4; F and LR as fractions.
inline double seld_error(double er20, double f20, double le_cd_deg, double lr_cd) {
  return (er20 + (1.0 - f20) + le_cd_deg / 180.0 + (1.0 - lr_cd)) / 4.0;
}

struct SeldScores {
  std::optional<double> er20;
  std::optional<double> f20;
  std::optional<double> le_cd;
  std::optional<double> lr_cd;
  std::optional<double> e_seld;
};

inline std::optional<double> seld_error(const SeldScores& s) {
  if (!s.er20 || !s.f20 || !s.le_cd || !s.lr_cd) return std::nullopt;
  return seld_error(*s.er20, *s.f20, *s.le_cd, *s.lr_cd);
}

inline SeldScores seld_scores(std::span<const CellMatch> cells, const MatchConfig& cfg) {
  const auto det = detection_metrics(cells, cfg);
  const auto loc = localization_metrics(cells);
  SeldScores s{det.er20, det.f20, loc.le_cd, loc.lr_cd, std::nullopt};
  s.e_seld = seld_error(s);
  return s;
}

inline SeldScores evaluate(std::span<const EventAnnotation> refs, std::span<const EventAnnotation> preds,
                           const MatchConfig& cfg = {}) {
  const auto cells = match_cells(refs, preds);
  return seld_scores(cells, cfg);
}

struct StratumScores {
  std::size_t n_refs = 0;
  std::optional<double> lr_cd;
  std::optional<double> le_cd;
};

// Localization scores restricted to cells whose reference count satisfies pred.
template <typename Pred>
StratumScores stratum_scores(std::span<const CellMatch> cells, Pred&& keep) {
  std::vector<CellMatch> subset;
  for (const auto& c : cells)
    if (c.n_refs > 0 && keep(c.n_refs)) subset.push_back(c);
  const auto loc = localization_metrics(subset);
  return {loc.n_refs, loc.lr_cd, loc.le_cd};
}

struct StratifiedScores {
  SeldScores overall;
  StratumScores same_class_overlap;     // cells with M_ct >= 2
  StratumScores no_same_class_overlap;  // cells with M_ct == 1
};

inline StratifiedScores stratified_scores(std::span<const CellMatch> cells, const MatchConfig& cfg = {}) {
  StratifiedScores s;
  s.overall = seld_scores(cells, cfg);
  s.same_class_overlap = stratum_scores(cells, [](int m) { return m >= 2; });
  s.no_same_class_overlap = stratum_scores(cells, [](int m) { return m < 2; });
  return s;
}

inline StratifiedScores stratified_scores(std::span<const EventAnnotation> refs,
                                          std::span<const EventAnnotation> preds, const MatchConfig& cfg = {}) {
  const auto cells = match_cells(refs, preds);
  return stratified_scores(cells, cfg);
}

inline std::string format_metric(const std::optional<double>& v, int precision = 6) {
  if (!v) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

// Plain-text summary followed by key=value lines in a fixed order.
inline void write_report(std::ostream& out, const StratifiedScores& s, const MatchConfig& cfg) {
  out << "# SELD evaluation (micro-averaged over (frame, class) cells; pairs by minimum total angle;\n"
      << "# LE_CD pooled over all matched pairs; F micro-averaged)\n";
  out << "# spatial threshold " << format_metric(cfg.spatial_threshold_deg, 1) << " deg, segment "
      << cfg.segment_frames << " frames\n";
  out << "#   ER20 " << format_metric(s.overall.er20, 3) << "  F20 " << format_metric(s.overall.f20, 3) << "  LE_CD "
      << format_metric(s.overall.le_cd, 2) << "  LR_CD " << format_metric(s.overall.lr_cd, 3) << "  E_SELD "
      << format_metric(s.overall.e_seld, 3) << '\n';
  out << "#   LR_CD w/ same-class overlap " << format_metric(s.same_class_overlap.lr_cd, 3) << " ("
      << s.same_class_overlap.n_refs << " refs), w/o " << format_metric(s.no_same_class_overlap.lr_cd, 3) << " ("
      << s.no_same_class_overlap.n_refs << " refs)\n";
  out << "er20=" << format_metric(s.overall.er20) << '\n'
      << "f20=" << format_metric(s.overall.f20) << '\n'
      << "le_cd=" << format_metric(s.overall.le_cd) << '\n'
      << "lr_cd=" << format_metric(s.overall.lr_cd) << '\n'
      << "e_seld=" << format_metric(s.overall.e_seld) << '\n'
      << "lr_cd_ov_same_class=" << format_metric(s.same_class_overlap.lr_cd) << '\n'
      << "lr_cd_no_ov_same_class=" << format_metric(s.no_same_class_overlap.lr_cd) << '\n'
      << "le_cd_ov_same_class=" << format_metric(s.same_class_overlap.le_cd) << '\n'
      << "le_cd_no_ov_same_class=" << format_metric(s.no_same_class_overlap.le_cd) << '\n'
      << "n_ref_ov_same_class=" << s.same_class_overlap.n_refs << '\n'
      << "n_ref_no_ov_same_class=" << s.no_same_class_overlap.n_refs << '\n';
}

}  // namespace adpit
