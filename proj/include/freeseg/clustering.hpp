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

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "freeseg/backbones.hpp"
#include "freeseg/grid.hpp"

namespace freeseg {

struct KMeansOptions {
  int k = 4;
  std::uint64_t seed = 0;
  int max_iters = 300;
  double tol = 1e-4;  // Frobenius norm of the centroid shift
  int threads = 1;    // assignment workers; results do not depend on it
};

struct ClusterResult {
  int k = 0;
  MatrixD centroids;                // k x C
  std::vector<int> assignments;     // one per point, in [0, k)
  double inertia = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<int> reseeded;        // clusters that went empty and were reseeded
  std::vector<double> inertia_history;  // after each assignment step
};

// Lloyd's algorithm with k-means++ seeding. Ties go to the lowest
// centroid index; an empty cluster takes the point farthest from its
// current centroid. Throws DegenerateInput when N < k and NonFinite on
// NaN/Inf input.
ClusterResult kmeans(const MatrixD& points, const KMeansOptions& options);

// Sum of squared distances of each point to its assigned centroid.
double compute_inertia(const MatrixD& points, const MatrixD& centroids,
                       const std::vector<int>& assignments);

// Zero mean, unit variance per column; constant columns become zero.
MatrixD standardize_columns(const MatrixF& features);

ClusterResult cluster_features(const FeatureStack& stack, int k, std::uint64_t seed,
                               bool standardize = true, int max_iters = 300,
                               double tol = 1e-4, int threads = 1);

// One boolean mask per cluster at feature-grid resolution.
std::vector<BinaryMask> binarize(const ClusterResult& result, int grid_size);

// Nearest-neighbour resampling: source row = floor(y * h / H).
BinaryMask upsample_nearest(const BinaryMask& mask, int height, int width);

// Cluster ids laid out on the grid, for debug rendering.
Grid<std::uint8_t> assignment_grid(const ClusterResult& result, int grid_size);
Grid<std::uint8_t> upsample_nearest(const Grid<std::uint8_t>& grid, int height, int width);

}  // namespace freeseg
