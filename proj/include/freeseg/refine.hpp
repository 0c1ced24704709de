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

#include <functional>
#include <span>
#include <vector>

#include "freeseg/grid.hpp"
#include "freeseg/image.hpp"

namespace freeseg {

// Per-label probabilities, label-major: probs[l * H * W + p].
struct UnaryField {
  int num_labels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> probs;
  std::vector<int> label_list;  // class index of each label slot

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  double at(int label, std::size_t pixel) const { return probs[label * pixels() + pixel]; }
};

// The assigned label gets `confidence`; the rest is split uniformly over the
// other active labels. Throws UnknownLabel for labels outside active_labels.
UnaryField labels_to_unary(const SegmentationMap& seg, std::span<const int> active_labels,
                           double confidence);

// Hard labels from a label-major probability field (ties -> lowest slot).
SegmentationMap argmax_labels(std::span<const double> probs, const UnaryField& layout);

struct CrfParams {
  int iterations = 5;
  double w_smooth = 3.0;
  double w_bilateral = 10.0;
  double theta_xy_smooth = 3.0;
  double theta_xy_bilateral = 60.0;
  double theta_rgb = 10.0;
  double unary_confidence = 0.8;
  // Images up to this many pixels use exact pairwise sums; larger ones use
  // the bilateral grid with at most this many occupied vertices.
  int exact_max_pixels = 4096;
};

enum class MessagePath { kAuto, kExact, kGrid };

// Computes out[l][i] = sum_m w_m sum_{j != i} k_m(i, j) q[l][j] for the
// Gaussian smoothness kernel (position) and the bilateral appearance kernel
// (position and colour).
class PairwiseFilter {
 public:
  PairwiseFilter(const ImageRecord& image, const CrfParams& params,
                 MessagePath path = MessagePath::kAuto);

  void apply(std::span<const double> q, int num_labels, std::vector<double>& out) const;

  MessagePath path() const { return path_; }
  std::size_t grid_vertices() const { return vertex_of_.empty() ? 0 : vertex_count_; }

 private:
  void smooth(std::span<const double> q, int num_labels, std::vector<double>& out) const;
  void bilateral_exact(std::span<const double> q, int num_labels, std::vector<double>& out) const;
  void bilateral_grid(std::span<const double> q, int num_labels, std::vector<double>& out) const;
  void build_grid(const ImageRecord& image);

  int height_;
  int width_;
  CrfParams params_;
  MessagePath path_;
  std::vector<double> features_;  // per pixel: x, y, r, g, b over their kernel widths
  std::vector<double> spatial_x_, spatial_y_;  // 1-D smoothness kernels
  int radius_x_ = 0, radius_y_ = 0;

  std::vector<int> vertex_of_;
  std::size_t vertex_count_ = 0;
  std::vector<double> vertex_features_;  // 5 per vertex
};

// Called after every mean-field update with the current label-major Q.
using MeanFieldObserver = std::function<void(int iteration, std::span<const double> q)>;

// Mean-field inference with Potts compatibility:
//   Q <- softmax(-U + sum_m w_m K_m * Q), self-excluded, U = -log(unary).
// Throws NonFinite if Q degenerates.
std::vector<double> mean_field(const ImageRecord& image, const UnaryField& unary,
                               const CrfParams& params, MessagePath path = MessagePath::kAuto,
                               const MeanFieldObserver& observer = {});

SegmentationMap dense_crf(const ImageRecord& image, const UnaryField& unary,
                          const CrfParams& params, MessagePath path = MessagePath::kAuto);

// Refines each label as its own foreground/background problem and keeps the
// label with the highest foreground marginal.
SegmentationMap dense_crf_per_region(const ImageRecord& image, const SegmentationMap& coarse,
                                     std::span<const int> active_labels, const CrfParams& params);

struct PamrParams {
  int iterations = 10;
  std::vector<int> dilations{1, 2, 4, 8, 12, 24};
};

// Local affinities, per pixel 8 neighbours for each dilation, softmax
// normalised: aff[p * (8 * D) + n].
std::vector<double> pamr_affinity(const ImageRecord& image, std::span<const int> dilations);

std::vector<double> pamr_scores(const ImageRecord& image, const UnaryField& unary,
                                int iterations, std::span<const int> dilations);

SegmentationMap pamr(const ImageRecord& image, const UnaryField& unary, int iterations,
                     std::span<const int> dilations);

}  // namespace freeseg
