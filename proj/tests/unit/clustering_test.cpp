/* Copyright 2026 The freeseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "freeseg/clustering.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

MatrixD make_points(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixD m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

// Smallest inertia over every assignment of n points to k labels.
double brute_force_inertia(const MatrixD& p, int k) {
  const std::size_t n = p.rows;
  std::vector<int> a(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      std::vector<double> mean(p.cols, 0.0);
      int count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (a[i] == j) {
          ++count;
          for (std::size_t d = 0; d < p.cols; ++d) mean[d] += p(i, d);
        }
      if (count == 0) continue;
      for (auto& v : mean) v /= count;
      for (std::size_t i = 0; i < n; ++i)
        if (a[i] == j)
          for (std::size_t d = 0; d < p.cols; ++d) total += (p(i, d) - mean[d]) * (p(i, d) - mean[d]);
    }
    best = std::min(best, total);
    std::size_t i = 0;
    while (i < n && ++a[i] == k) a[i++] = 0;
    if (i == n) break;
  }
  return best;
}

TEST(KMeans, TwoClusterToy) {
  const auto p = make_points({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    KMeansOptions o;
    o.k = 2;
    o.seed = seed;
    const auto r = kmeans(p, o);
    EXPECT_DOUBLE_EQ(r.inertia, 1.0) << seed;
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[2]);
  }
  EXPECT_DOUBLE_EQ(brute_force_inertia(p, 2), 1.0);
}

TEST(KMeans, SmallSetsReachTheBruteForceOptimum) {
  std::mt19937 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixD p(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
      const double cx = (i % 3) * 6.0;
      p(i, 0) = cx + n(rng) * 0.5;
      p(i, 1) = n(rng) * 0.5;
    }
    const double oracle = brute_force_inertia(p, 3);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      KMeansOptions o;
      o.k = 3;
      o.seed = seed;
      best = std::min(best, kmeans(p, o).inertia);
    }
    EXPECT_NEAR(best, oracle, 1e-9) << trial;
  }
}

TEST(KMeans, InertiaMatchesAssignmentsAndNeverRises) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  MatrixD p(500, 4);
  for (auto& v : p.data) v = u(rng);
  KMeansOptions o;
  o.k = 5;
  o.seed = 3;
  const auto r = kmeans(p, o);
  EXPECT_NEAR(r.inertia, compute_inertia(p, r.centroids, r.assignments), 1e-9);
  for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
    EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-9) << i;
  // Each point sits with its nearest centroid.
  for (std::size_t i = 0; i < p.rows; ++i) {
    auto d2 = [&](int j) {
      double s = 0;
      for (std::size_t d = 0; d < p.cols; ++d) s += std::pow(p(i, d) - r.centroids(j, d), 2);
      return s;
    };
    for (int j = 0; j < o.k; ++j) EXPECT_LE(d2(r.assignments[i]), d2(j) + 1e-12);
  }
}

TEST(KMeans, SameSeedSameResultAcrossThreadCounts) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  MatrixD p(1024, 6);
  for (auto& v : p.data) v = n(rng);
  KMeansOptions o;
  o.k = 4;
  o.seed = 42;
  const auto a = kmeans(p, o);
  const auto b = kmeans(p, o);
  o.threads = 4;
  const auto c = kmeans(p, o);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.assignments, c.assignments);
  EXPECT_EQ(a.centroids, c.centroids);
  EXPECT_EQ(a.inertia, c.inertia);
}

TEST(KMeans, ExactlyKPoints) {
  const auto p = make_points({{0, 0}, {1, 5}, {3, 3}});
  KMeansOptions o;
  o.k = 3;
  const auto r = kmeans(p, o);
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
  std::vector<int> sorted = r.assignments;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2}));
}

TEST(KMeans, IdenticalPointsDoNotCrash) {
  MatrixD p(10, 3, 2.5);
  KMeansOptions o;
  o.k = 4;
  const auto r = kmeans(p, o);
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.assignments.size(), 10u);
  for (int a : r.assignments) {
    EXPECT_GE(a, 0);
    EXPECT_LT(a, 4);
  }
}

TEST(KMeans, EmptyClusterIsReseeded) {
  // Two far groups of duplicates and K=3: one cluster must borrow a point.
  const auto p = make_points({{0, 0}, {0, 0}, {0, 0}, {9, 9}, {9, 9}, {9, 9}, {9, 10}});
  KMeansOptions o;
  o.k = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    o.seed = seed;
    const auto r = kmeans(p, o);
    std::vector<int> counts(3, 0);
    for (int a : r.assignments) ++counts[a];
    for (int c : counts) EXPECT_GT(c, 0) << seed;
  }
}

TEST(KMeans, RejectsBadInput) {
  const auto p = make_points({{0, 0}, {1, 1}});
  KMeansOptions o;
  o.k = 3;
  EXPECT_THROW(kmeans(p, o), DegenerateInput);
  o.k = 0;
  EXPECT_THROW(kmeans(p, o), DegenerateInput);
  o.k = 1;
  auto bad = p;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(kmeans(bad, o), NonFinite);
}

TEST(Standardize, ZeroMeanUnitVarianceAndConstantColumns) {
  MatrixF f(4, 2);
  const float col0[4] = {1, 2, 3, 4};
  for (int r = 0; r < 4; ++r) {
    f(r, 0) = col0[r];
    f(r, 1) = 7.0f;
  }
  const auto s = standardize_columns(f);
  const double sd = std::sqrt(1.25);
  for (int r = 0; r < 4; ++r) {
    EXPECT_NEAR(s(r, 0), (col0[r] - 2.5) / sd, 1e-12);
    EXPECT_EQ(s(r, 1), 0.0);
  }
}

TEST(Masks, BinarizePartitionsTheGrid) {
  ClusterResult r;
  r.k = 3;
  r.assignments = {0, 1, 1, 2, 0, 0, 2, 2, 1};
  const auto masks = binarize(r, 3);
  ASSERT_EQ(masks.size(), 3u);
  for (std::size_t i = 0; i < 9; ++i) {
    int owners = 0;
    for (int j = 0; j < 3; ++j) owners += masks[j].cells.data[i];
    EXPECT_EQ(owners, 1);
    EXPECT_EQ(masks[r.assignments[i]].cells.data[i], 1);
  }
  EXPECT_THROW(binarize(r, 4), ShapeMismatch);
}

TEST(Masks, NearestUpsampleKeepsCoverage) {
  Grid<std::uint8_t> g(2, 2);
  g.data = {0, 1, 2, 3};
  const auto up = upsample_nearest(g, 4, 6);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) EXPECT_EQ(up(y, x), g(y / 2, x / 3));

  ClusterResult r;
  r.k = 2;
  r.assignments.resize(32 * 32);
  for (std::size_t i = 0; i < r.assignments.size(); ++i) r.assignments[i] = (i * 7) % 5 == 0;
  const auto masks = binarize(r, 32);
  std::size_t covered = 0;
  for (const auto& m : masks) {
    const auto big = upsample_nearest(m, 90, 120);
    EXPECT_EQ(big.resolution, MaskResolution::kImage);
    covered += big.count();
  }
  EXPECT_EQ(covered, 90u * 120u);
}

}  // namespace
}  // namespace freeseg
