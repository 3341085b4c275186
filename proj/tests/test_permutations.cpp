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

#include <set>

#include "adpit/permutations.hpp"
#include "oracles.hpp"

using namespace adpit;

TEST(AdpitCount, KnownValues) {
  EXPECT_EQ(permutation_count_adpit(3, 2), 12u);
  EXPECT_EQ(permutation_count_adpit(3, 1), 3u);
  EXPECT_EQ(permutation_count_adpit(3, 0), 1u);
  EXPECT_EQ(permutation_count_adpit(3, 3), 6u);
  EXPECT_THROW(permutation_count_adpit(2, 3), DomainError);
}

TEST(AdpitCount, AgreesWithSlowEnumeration) {
  for (int n = 1; n <= 5; ++n)
    for (int m = 0; m <= n; ++m) {
      EXPECT_EQ(permutation_count_adpit(n, m), oracle::raw_adpit_count(n, m)) << n << "," << m;
      EXPECT_EQ(raw_adpit_assignments(n, m).size(), oracle::raw_adpit_count(n, m)) << n << "," << m;
    }
}

TEST(AdpitAssignments, DistinctAreTheSurjections) {
  for (int n = 1; n <= 5; ++n)
    for (int m = 0; m <= n; ++m) {
      const auto distinct = generate_assignments(PitVariant::ClassWiseAdpit, n, m);
      EXPECT_EQ(distinct.size(), oracle::surjection_count(n, m));
      if (m > 0) {
        EXPECT_EQ(distinct.size(), oracle::factorial(m) * oracle::stirling2(n, m));
      }
      // distinct count reaches the raw count exactly when no track is a duplicate
      EXPECT_LE(distinct.size(), permutation_count_adpit(n, m));
      const bool equal = distinct.size() == permutation_count_adpit(n, m);
      EXPECT_EQ(equal, m == n || m == 0) << n << "," << m;
      for (const auto& a : distinct) {
        std::set<int> hit;
        for (int v : a) {
          if (m == 0) {
            EXPECT_EQ(v, kZeroTarget);
          } else {
            EXPECT_GE(v, 0);
            EXPECT_LT(v, m);
            hit.insert(v);
          }
        }
        if (m > 0) {
          EXPECT_EQ(static_cast<int>(hit.size()), m);
        }
      }
      EXPECT_EQ(std::set<Assignment>(distinct.begin(), distinct.end()).size(), distinct.size());
    }
}

TEST(AdpitAssignments, ThreeTracksSmallTargetCounts) {
  EXPECT_EQ(generate_assignments(PitVariant::ClassWiseAdpit, 3, 1).size(), 1u);
  EXPECT_EQ(generate_assignments(PitVariant::ClassWiseAdpit, 3, 2).size(), 6u);
  const auto one = generate_assignments(PitVariant::ClassWiseAdpit, 3, 1);
  EXPECT_EQ(one[0], (Assignment{0, 0, 0}));
}

TEST(AdpitAssignments, RawMarksDuplicates) {
  for (const auto& r : raw_adpit_assignments(3, 2)) {
    int originals = 0;
    for (int n = 0; n < 3; ++n) originals += !r.duplicated[n];
    EXPECT_EQ(originals, 2);
  }
}

TEST(PlainAssignments, ClassWiseCounts) {
  EXPECT_EQ(generate_assignments(PitVariant::ClassWise, 3, 1).size(), 3u);
  EXPECT_EQ(generate_assignments(PitVariant::ClassWise, 3, 0).size(), 1u);
  EXPECT_EQ(generate_assignments(PitVariant::ClassWise, 3, 3).size(), 6u);
  // P(N, M) distinct placements of M originals among N tracks
  for (int n = 1; n <= 5; ++n)
    for (int m = 0; m <= n; ++m) {
      const auto list = generate_assignments(PitVariant::ClassWise, n, m);
      EXPECT_EQ(list.size(), oracle::factorial(n) / oracle::factorial(n - m));
      for (const auto& a : list) {
        int zeros = 0;
        for (int v : a) zeros += v == kZeroTarget;
        EXPECT_EQ(zeros, n - m);
      }
    }
  EXPECT_EQ(generate_assignments(PitVariant::NonClassWise, 3, 2), generate_assignments(PitVariant::ClassWise, 3, 2));
}

TEST(PlainAssignments, FirstIsIdentityLayout) {
  for (auto v : {PitVariant::NonClassWise, PitVariant::ClassWise, PitVariant::ClassWiseAdpit})
    EXPECT_EQ(generate_assignments(v, 3, 3)[0], (Assignment{0, 1, 2}));
  EXPECT_EQ(generate_assignments(PitVariant::ClassWise, 3, 1)[0], (Assignment{0, kZeroTarget, kZeroTarget}));
}

TEST(PermutationTableTest, CapacityLimits) {
  EXPECT_THROW(PermutationTable(PitVariant::ClassWise, 7), CapacityError);
  const PermutationTable table(PitVariant::ClassWiseAdpit, 3);
  EXPECT_EQ(table.for_targets(2).size(), 6u);
  EXPECT_THROW(table.for_targets(4), CapacityError);
}

TEST(Variants, NamesRoundTrip) {
  for (auto v : {PitVariant::NonClassWise, PitVariant::ClassWise, PitVariant::ClassWiseAdpit})
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("hungarian"), ContractError);
  EXPECT_EQ(format_assignment({0, kZeroTarget, 1}), "0 - 1");
}
