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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

constexpr std::size_t kChunk = 256;

double squared_distance(const double* a, const double* b, std::size_t dims) {
  double s = 0.0;
  for (std::size_t i = 0; i < dims; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Runs fn(begin, end) over fixed-size chunks, spread over `threads`
// workers. Each chunk writes only its own slots.
template <typename Fn>
void for_chunks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  if (threads <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    return;
  }
  const int workers = static_cast<int>(std::min<std::size_t>(threads, chunks));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers)
        fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    });
  }
  for (auto& t : pool) t.join();
}

// Nearest-centroid assignment; returns inertia summed in chunk order.
double assign_points(const MatrixD& points, const MatrixD& centroids,
                     std::vector<int>& assignments, std::vector<double>& distances,
                     int threads) {
  const std::size_t n = points.rows;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  for_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      int best = 0;
      double best_d = squared_distance(points.row(i), centroids.row(0), points.cols);
      for (std::size_t j = 1; j < centroids.rows; ++j) {
        const double d = squared_distance(points.row(i), centroids.row(j), points.cols);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      assignments[i] = best;
      distances[i] = best_d;
      acc += best_d;
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

MatrixD kmeanspp_init(const MatrixD& points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.rows;
  MatrixD centroids(static_cast<std::size_t>(k), points.cols);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy_n(points.row(first), points.cols, centroids.row(0));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = squared_distance(points.row(i), centroids.row(0), points.cols);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      // every point coincides with a chosen centroid
      chosen = pick(rng);
    } else {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    std::copy_n(points.row(chosen), points.cols, centroids.row(c));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c), points.cols));
  }
  return centroids;
}

}  // namespace

double compute_inertia(const MatrixD& points, const MatrixD& centroids,
                       const std::vector<int>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i)
    total += squared_distance(points.row(i), centroids.row(assignments[i]), points.cols);
  return total;
}

ClusterResult kmeans(const MatrixD& points, const KMeansOptions& options) {
  const std::size_t n = points.rows;
  const std::size_t dims = points.cols;
  const int k = options.k;
  if (k < 1) throw DegenerateInput("k must be at least 1");
  if (n < static_cast<std::size_t>(k))
    throw DegenerateInput("kmeans needs at least k=" + std::to_string(k) + " points, got " +
                          std::to_string(n));
  if (dims == 0) throw DegenerateInput("points have no dimensions");
  if (options.max_iters < 1) throw DegenerateInput("max_iters must be at least 1");
  if (options.tol < 0) throw DegenerateInput("tol must be non-negative");
  for (double v : points.data)
    if (!std::isfinite(v)) throw NonFinite("kmeans input contains NaN or Inf");

  std::mt19937_64 rng(options.seed);
  ClusterResult result;
  result.k = k;
  result.seed = options.seed;
  result.centroids = kmeanspp_init(points, k, rng);
  result.assignments.assign(n, 0);
  std::vector<double> distances(n, 0.0);
  std::vector<char> reseeded(k, 0);

  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  MatrixD next(static_cast<std::size_t>(k), dims);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const double inertia =
        assign_points(points, result.centroids, result.assignments, distances, options.threads);
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;

    // Deterministic reduction: per-chunk partial sums added in chunk order.
    std::vector<MatrixD> partial_sums(chunks, MatrixD(static_cast<std::size_t>(k), dims));
    std::vector<std::vector<std::size_t>> partial_counts(chunks, std::vector<std::size_t>(k, 0));
    for_chunks(n, options.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const int a = result.assignments[i];
        double* dst = partial_sums[c].row(a);
        const double* src = points.row(i);
        for (std::size_t d = 0; d < dims; ++d) dst[d] += src[d];
        ++partial_counts[c][a];
      }
    });
    std::fill(next.data.begin(), next.data.end(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t c = 0; c < chunks; ++c) {
      for (std::size_t j = 0; j < next.data.size(); ++j) next.data[j] += partial_sums[c].data[j];
      for (int j = 0; j < k; ++j) counts[j] += partial_counts[c][j];
    }

    // Empty cluster: move it onto the worst-served point (lowest index on
    // ties) whose cluster can spare it, and take that point out of the
    // donor's sums.
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] < 2) continue;
        if (far == n || distances[i] > distances[far]) far = i;
      }
      if (far == n) continue;
      const int from = result.assignments[far];
      for (std::size_t d = 0; d < dims; ++d) {
        next(from, d) -= points(far, d);
        next(j, d) = points(far, d);
      }
      --counts[from];
      counts[j] = 1;
      distances[far] = 0.0;
      result.assignments[far] = j;
      reseeded[j] = 1;
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] == 0) {
        std::copy_n(result.centroids.row(j), dims, next.row(j));
        continue;
      }
      for (std::size_t d = 0; d < dims; ++d) next(j, d) /= static_cast<double>(counts[j]);
    }

    double shift = 0.0;
    for (std::size_t idx = 0; idx < next.data.size(); ++idx) {
      const double d = next.data[idx] - result.centroids.data[idx];
      shift += d * d;
    }
    std::swap(result.centroids, next);
    if (std::sqrt(shift) < options.tol) break;
  }

  result.inertia =
      assign_points(points, result.centroids, result.assignments, distances, options.threads);
  result.inertia_history.push_back(result.inertia);
  std::vector<std::size_t> final_counts(k, 0);
  for (int a : result.assignments) ++final_counts[a];
  for (int j = 0; j < k; ++j)
    if (reseeded[j] || final_counts[j] == 0) result.reseeded.push_back(j);
  return result;
}

MatrixD standardize_columns(const MatrixF& features) {
  MatrixD out(features.rows, features.cols);
  if (features.rows == 0) return out;
  const double n = static_cast<double>(features.rows);
  for (std::size_t c = 0; c < features.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) mean += features(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) {
      const double d = features(r, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    // relative threshold: float noise on a constant column must not survive
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(mean));
    for (std::size_t r = 0; r < features.rows; ++r)
      out(r, c) = constant ? 0.0 : (features(r, c) - mean) / sd;
  }
  return out;
}

ClusterResult cluster_features(const FeatureStack& stack, int k, std::uint64_t seed,
                               bool standardize, int max_iters, double tol, int threads) {
  const std::size_t cells = static_cast<std::size_t>(stack.grid_size) * stack.grid_size;
  if (stack.concat.rows != cells || stack.concat.cols == 0)
    throw ShapeMismatch("feature stack concat is not grid_size^2 x C");
  MatrixD points;
  if (standardize) {
    points = standardize_columns(stack.concat);
  } else {
    points = MatrixD(stack.concat.rows, stack.concat.cols);
    std::copy(stack.concat.data.begin(), stack.concat.data.end(), points.data.begin());
  }
  KMeansOptions opts;
  opts.k = k;
  opts.seed = seed;
  opts.max_iters = max_iters;
  opts.tol = tol;
  opts.threads = threads;
  return kmeans(points, opts);
}

std::vector<BinaryMask> binarize(const ClusterResult& result, int grid_size) {
  if (result.assignments.size() != static_cast<std::size_t>(grid_size) * grid_size)
    throw ShapeMismatch("assignment count does not match grid_size^2");
  std::vector<BinaryMask> masks(result.k);
  for (auto& m : masks) {
    m.cells = Grid<std::uint8_t>(grid_size, grid_size, 0);
    m.resolution = MaskResolution::kFeatureGrid;
  }
  for (std::size_t i = 0; i < result.assignments.size(); ++i)
    masks[result.assignments[i]].cells.data[i] = 1;
  return masks;
}

Grid<std::uint8_t> upsample_nearest(const Grid<std::uint8_t>& grid, int height, int width) {
  Grid<std::uint8_t> out(height, width);
  std::vector<int> cols(width);
  for (int x = 0; x < width; ++x)
    cols[x] = static_cast<int>(static_cast<long long>(x) * grid.width / width);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * grid.height / height);
    for (int x = 0; x < width; ++x) out(y, x) = grid(sy, cols[x]);
  }
  return out;
}

BinaryMask upsample_nearest(const BinaryMask& mask, int height, int width) {
  BinaryMask out;
  out.cells = upsample_nearest(mask.cells, height, width);
  out.resolution = MaskResolution::kImage;
  return out;
}

Grid<std::uint8_t> assignment_grid(const ClusterResult& result, int grid_size) {
  if (result.assignments.size() != static_cast<std::size_t>(grid_size) * grid_size)
    throw ShapeMismatch("assignment count does not match grid_size^2");
  Grid<std::uint8_t> g(grid_size, grid_size);
  for (std::size_t i = 0; i < result.assignments.size(); ++i)
    g.data[i] = static_cast<std::uint8_t>(result.assignments[i]);
  return g;
}

}  // namespace freeseg
