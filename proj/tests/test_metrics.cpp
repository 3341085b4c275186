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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "adpit/metrics.hpp"
#include "oracles.hpp"

using namespace adpit;

namespace {

EventAnnotation ev(int frame, int cls, double az, double el = 0.0, int source = 0) {
  return {frame, cls, source, direction_from_angles(az, el)};
}

}  // namespace

TEST(Matching, Trivial) {
  const std::vector<Direction> a{{1, 0, 0}};
  const auto m = match_frame_class(a, a);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].angle_deg, 0.0);
  const auto none = match_frame_class(a, {});
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_EQ(none.unmatched_refs, std::vector<int>{0});
}

TEST(Matching, AvoidsCrossing) {
  const std::vector<Direction> refs{direction_from_angles(0, 0), direction_from_angles(90, 0)};
  const std::vector<Direction> preds{direction_from_angles(85, 0), direction_from_angles(5, 0)};
  const auto m = match_frame_class(refs, preds);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].pred, 1);
  EXPECT_EQ(m.pairs[1].pred, 0);
  EXPECT_NEAR(m.total_angle_deg, 10.0, 1e-9);
}

TEST(Matching, OptimalAgainstBruteForce) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> size(0, 6);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<Direction> refs(size(rng)), preds(size(rng));
    for (auto& d : refs) d = oracle::random_unit(rng);
    for (auto& d : preds) d = oracle::random_unit(rng);
    const auto m = match_frame_class(refs, preds);
    EXPECT_EQ(m.pairs.size(), std::min(refs.size(), preds.size()));
    EXPECT_NEAR(m.total_angle_deg, oracle::best_total_angle(refs, preds), 1e-9);
    EXPECT_EQ(m.unmatched_refs.size() + m.pairs.size(), refs.size());
    EXPECT_EQ(m.unmatched_preds.size() + m.pairs.size(), preds.size());
  }
}

TEST(Localization, Examples) {
  const std::vector<EventAnnotation> refs{ev(0, 0, 0), ev(1, 0, 50), ev(2, 1, -20), ev(3, 1, 100)};
  const auto perfect = evaluate(refs, refs);
  EXPECT_EQ(*perfect.le_cd, 0.0);
  EXPECT_EQ(*perfect.lr_cd, 1.0);
  EXPECT_EQ(*perfect.er20, 0.0);
  EXPECT_EQ(*perfect.f20, 1.0);
  EXPECT_EQ(*perfect.e_seld, 0.0);

  std::vector<EventAnnotation> off;
  for (const auto& r : refs) off.push_back(ev(r.frame, r.class_id, angles_from_direction(r.direction).azimuth_deg + 30));
  const auto thirty = evaluate(refs, off);
  EXPECT_NEAR(*thirty.le_cd, 30.0, 1e-9);
  EXPECT_EQ(*thirty.lr_cd, 1.0);
  EXPECT_EQ(*thirty.f20, 0.0);

  const std::vector<EventAnnotation> half{refs[0], refs[2]};
  EXPECT_EQ(*evaluate(refs, half).lr_cd, 0.5);
}

TEST(Localization, UndefinedMarkers) {
  const auto s = evaluate({}, {});
  EXPECT_FALSE(s.lr_cd);
  EXPECT_FALSE(s.le_cd);
  EXPECT_FALSE(s.er20);
  EXPECT_FALSE(s.e_seld);
  const std::vector<EventAnnotation> refs{ev(0, 0, 0)};
  const auto missed = evaluate(refs, {});
  EXPECT_FALSE(missed.le_cd);
  EXPECT_EQ(*missed.lr_cd, 0.0);
  EXPECT_FALSE(missed.e_seld);
}

TEST(Detection, SubstitutionAndDeletion) {
  const std::vector<EventAnnotation> refs{ev(0, 0, 0)};
  const std::vector<EventAnnotation> far{ev(0, 0, 25)};
  const auto cells = match_cells(refs, far);
  const auto d = detection_metrics(cells, {});
  EXPECT_EQ(d.tp, 0u);
  EXPECT_EQ(d.fp, 1u);
  EXPECT_EQ(d.fn, 1u);
  EXPECT_EQ(d.substitutions, 1u);
  EXPECT_EQ(*d.er20, 1.0);
  EXPECT_EQ(*d.f20, 0.0);

  const auto del = detection_metrics(match_cells(refs, {}), {});
  EXPECT_EQ(del.deletions, 1u);
  EXPECT_EQ(*del.er20, 1.0);
  EXPECT_EQ(*del.f20, 0.0);
}

TEST(Detection, ThresholdIsStrict) {
  const std::vector<EventAnnotation> refs{ev(0, 0, 0)};
  const std::vector<EventAnnotation> preds{ev(0, 0, 20)};
  MatchConfig cfg;
  cfg.spatial_threshold_deg = angle_between(refs[0].direction, preds[0].direction);
  EXPECT_EQ(detection_metrics(match_cells(refs, preds), cfg).tp, 0u);
  cfg.spatial_threshold_deg += 1e-9;
  EXPECT_EQ(detection_metrics(match_cells(refs, preds), cfg).tp, 1u);
}

TEST(Detection, SegmentsPoolErrors) {
  // a deletion at frame 1 and an insertion at frame 8 share a segment and
  // count as one substitution; in different segments they stay separate
  const std::vector<EventAnnotation> refs{ev(1, 0, 0)};
  const std::vector<EventAnnotation> preds{ev(8, 0, 0)};
  const auto cells = match_cells(refs, preds);
  const auto same = detection_metrics(cells, {20, 10});
  EXPECT_EQ(same.substitutions, 1u);
  EXPECT_EQ(*same.er20, 1.0);
  const auto split = detection_metrics(cells, {20, 5});
  EXPECT_EQ(split.deletions, 1u);
  EXPECT_EQ(split.insertions, 1u);
  EXPECT_EQ(*split.er20, 2.0);
}

TEST(SeldError, PrintedRows) {
  EXPECT_NEAR(seld_error(0.586, 0.555, 18.4, 0.639), 0.374, 0.0005);
  EXPECT_NEAR(seld_error(0.436, 0.679, 11.5, 0.695), 0.281, 0.0005);
  EXPECT_EQ(seld_error(0, 1, 0, 1), 0.0);
  EXPECT_FALSE(seld_error(SeldScores{0.1, 0.9, std::nullopt, 0.8, std::nullopt}));
}

TEST(Stratified, Examples) {
  const std::vector<EventAnnotation> singles{ev(0, 0, 0), ev(1, 0, 40), ev(1, 1, 80)};
  const auto s = stratified_scores(singles, singles);
  EXPECT_FALSE(s.same_class_overlap.lr_cd);
  EXPECT_EQ(*s.no_same_class_overlap.lr_cd, *s.overall.lr_cd);

  // two same-class events, a single-format system reports only one of them
  const std::vector<EventAnnotation> pair{ev(0, 0, 0, 0, 0), ev(0, 0, 90, 0, 1)};
  const std::vector<EventAnnotation> one{ev(0, 0, 0)};
  EXPECT_EQ(*stratified_scores(pair, one).same_class_overlap.lr_cd, 0.5);
  const auto perfect = stratified_scores(pair, pair);
  EXPECT_EQ(*perfect.same_class_overlap.lr_cd, 1.0);
}

TEST(Stratified, GlobalRecallIsWeightedMean) {
  std::mt19937_64 rng(42);
  std::bernoulli_distribution keep(0.7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EventAnnotation> refs, preds;
    for (int t = 0; t < 20; ++t)
      for (int c = 0; c < 3; ++c) {
        const int m = static_cast<int>(rng() % 4);
        for (int s = 0; s < m; ++s) {
          refs.push_back({t, c, s, oracle::random_unit(rng)});
          if (keep(rng)) preds.push_back({t, c, s, oracle::random_unit(rng)});
        }
      }
    const auto s = stratified_scores(refs, preds);
    if (!s.overall.lr_cd) continue;
    const auto& ov = s.same_class_overlap;
    const auto& no = s.no_same_class_overlap;
    const double weighted = (ov.lr_cd.value_or(0) * ov.n_refs + no.lr_cd.value_or(0) * no.n_refs) /
                            static_cast<double>(ov.n_refs + no.n_refs);
    EXPECT_NEAR(*s.overall.lr_cd, weighted, 1e-12);
  }
}

TEST(Monotonicity, SpuriousPredictionNeverHelps) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EventAnnotation> refs, preds;
    for (int t = 0; t < 12; ++t)
      for (int c = 0; c < 2; ++c) {
        const int m = static_cast<int>(rng() % 3);
        for (int s = 0; s < m; ++s) refs.push_back({t, c, s, oracle::random_unit(rng)});
        const int k = static_cast<int>(rng() % 3);
        for (int s = 0; s < k; ++s) preds.push_back({t, c, s, oracle::random_unit(rng)});
      }
    const auto base = evaluate(refs, preds);
    auto extra = preds;
    // class 2 carries no references, so the extra output cannot be a hit
    extra.push_back({static_cast<int>(rng() % 12), 2, 9, oracle::random_unit(rng)});
    const auto more = evaluate(refs, extra);
    if (base.f20 && more.f20) {
      EXPECT_LE(*more.f20, *base.f20 + 1e-12);
    }
    if (base.er20 && more.er20) {
      EXPECT_GE(*more.er20, *base.er20 - 1e-12);
    }
  }
}

TEST(Report, StableKeysAndUndefined) {
  const std::vector<EventAnnotation> refs{ev(0, 0, 0)};
  std::ostringstream out;
  write_report(out, stratified_scores(refs, refs), {});
  const std::string text = out.str();
  EXPECT_NE(text.find("\ner20=0.000000\nf20=1.000000\nle_cd=0.000000\nlr_cd=1.000000\ne_seld=0.000000\n"),
            std::string::npos);
  EXPECT_NE(text.find("lr_cd_ov_same_class=undefined"), std::string::npos);
  EXPECT_NE(text.find("micro"), std::string::npos);
}
