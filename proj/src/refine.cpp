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

#include "freeseg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

std::vector<double> gaussian_taps(int radius, double theta) {
  std::vector<double> taps(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d)
    taps[d + radius] = std::exp(-0.5 * (d * d) / (theta * theta));
  return taps;
}

int argmax_slot(std::span<const double> probs, std::size_t pixels, int labels, std::size_t p) {
  int best = 0;
  double best_v = probs[p];
  for (int l = 1; l < labels; ++l) {
    const double v = probs[l * pixels + p];
    if (v > best_v) {
      best_v = v;
      best = l;
    }
  }
  return best;
}

}  // namespace

UnaryField labels_to_unary(const SegmentationMap& seg, std::span<const int> active_labels,
                           double confidence) {
  std::vector<int> labels(active_labels.begin(), active_labels.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw UnknownLabel("no active labels");
  const int num = static_cast<int>(labels.size());
  if (num == 1) {
    confidence = 1.0;
  } else if (!(confidence >= 1.0 / num - 1e-12 && confidence < 1.0)) {
    throw DegenerateInput("unary confidence must lie in [1/L, 1), got " +
                          std::to_string(confidence));
  }

  UnaryField field;
  field.num_labels = num;
  field.height = seg.labels.height;
  field.width = seg.labels.width;
  field.label_list = labels;
  const std::size_t n = field.pixels();
  const double off = num > 1 ? (1.0 - confidence) / (num - 1) : 0.0;
  field.probs.assign(static_cast<std::size_t>(num) * n, off);
  std::unordered_map<int, int> slot;
  for (int i = 0; i < num; ++i) slot[labels[i]] = i;
  for (std::size_t p = 0; p < n; ++p) {
    auto it = slot.find(seg.labels.data[p]);
    if (it == slot.end())
      throw UnknownLabel("label " + std::to_string(seg.labels.data[p]) +
                         " is not among the active labels");
    field.probs[it->second * n + p] = confidence;
  }
  return field;
}

SegmentationMap argmax_labels(std::span<const double> probs, const UnaryField& layout) {
  SegmentationMap seg;
  seg.labels = Grid<std::int32_t>(layout.height, layout.width);
  const std::size_t n = layout.pixels();
  for (std::size_t p = 0; p < n; ++p)
    seg.labels.data[p] = layout.label_list[argmax_slot(probs, n, layout.num_labels, p)];
  return seg;
}

// ---------------------------------------------------------------------------

PairwiseFilter::PairwiseFilter(const ImageRecord& image, const CrfParams& params,
                               MessagePath path)
    : height_(image.height), width_(image.width), params_(params), path_(path) {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  if (path_ == MessagePath::kAuto)
    path_ = n <= static_cast<std::size_t>(std::max(params.exact_max_pixels, 1))
                ? MessagePath::kExact
                : MessagePath::kGrid;

  if (params.w_smooth != 0.0) {
    if (path_ == MessagePath::kExact) {
      radius_x_ = width_ - 1;
      radius_y_ = height_ - 1;
    } else {
      const int r = static_cast<int>(std::ceil(5.0 * params.theta_xy_smooth));
      radius_x_ = std::min(r, width_ - 1);
      radius_y_ = std::min(r, height_ - 1);
    }
    spatial_x_ = gaussian_taps(radius_x_, params.theta_xy_smooth);
    spatial_y_ = gaussian_taps(radius_y_, params.theta_xy_smooth);
  }

  if (params.w_bilateral != 0.0) {
    features_.resize(n * 5);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        double* f = features_.data() + (static_cast<std::size_t>(y) * width_ + x) * 5;
        f[0] = x / params.theta_xy_bilateral;
        f[1] = y / params.theta_xy_bilateral;
        for (int c = 0; c < 3; ++c) f[2 + c] = image.at(y, x, c) / params.theta_rgb;
      }
    }
    if (path_ == MessagePath::kGrid) build_grid(image);
  }
}

void PairwiseFilter::build_grid(const ImageRecord&) {
  const std::size_t n = features_.size() / 5;
  const std::size_t budget = static_cast<std::size_t>(std::max(params_.exact_max_pixels, 1));
  double spacing = 0.5;  // in kernel standard deviations
  std::unordered_map<std::uint64_t, int> index;
  while (true) {
    index.clear();
    vertex_of_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t key = 0;
      for (int d = 0; d < 5; ++d) {
        const auto b = static_cast<std::uint64_t>(
            static_cast<std::int64_t>(std::floor(features_[i * 5 + d] / spacing)) & 0xfff);
        key = (key << 12) | b;
      }
      auto [it, inserted] = index.emplace(key, static_cast<int>(index.size()));
      vertex_of_[i] = it->second;
    }
    if (index.size() <= budget) break;
    spacing *= 1.25;
  }
  vertex_count_ = index.size();
  vertex_features_.assign(vertex_count_ * 5, 0.0);
  std::vector<double> counts(vertex_count_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = vertex_of_[i];
    counts[v] += 1.0;
    for (int d = 0; d < 5; ++d) vertex_features_[v * 5 + d] += features_[i * 5 + d];
  }
  for (std::size_t v = 0; v < vertex_count_; ++v)
    for (int d = 0; d < 5; ++d) vertex_features_[v * 5 + d] /= counts[v];
}

void PairwiseFilter::smooth(std::span<const double> q, int num_labels,
                            std::vector<double>& out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  std::vector<double> tmp(n);
  const double w = params_.w_smooth;
  for (int l = 0; l < num_labels; ++l) {
    const double* src = q.data() + l * n;
    // rows
    for (int y = 0; y < height_; ++y) {
      const double* row = src + static_cast<std::size_t>(y) * width_;
      double* dst = tmp.data() + static_cast<std::size_t>(y) * width_;
      for (int x = 0; x < width_; ++x) {
        const int lo = std::max(0, x - radius_x_), hi = std::min(width_ - 1, x + radius_x_);
        double acc = 0.0;
        for (int xx = lo; xx <= hi; ++xx) acc += spatial_x_[xx - x + radius_x_] * row[xx];
        dst[x] = acc;
      }
    }
    // columns, then drop the self term (kernel value 1 at distance 0)
    double* result = out.data() + l * n;
    for (int y = 0; y < height_; ++y) {
      const int lo = std::max(0, y - radius_y_), hi = std::min(height_ - 1, y + radius_y_);
      for (int x = 0; x < width_; ++x) {
        double acc = 0.0;
        for (int yy = lo; yy <= hi; ++yy)
          acc += spatial_y_[yy - y + radius_y_] * tmp[static_cast<std::size_t>(yy) * width_ + x];
        const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
        result[p] += w * (acc - src[p]);
      }
    }
  }
}

void PairwiseFilter::bilateral_exact(std::span<const double> q, int num_labels,
                                     std::vector<double>& out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  const double w = params_.w_bilateral;
  std::vector<double> acc(n * num_labels, 0.0);  // pixel-major for locality
  std::vector<double> qp(n * num_labels);
  for (int l = 0; l < num_labels; ++l)
    for (std::size_t p = 0; p < n; ++p) qp[p * num_labels + l] = q[l * n + p];
  for (std::size_t i = 0; i < n; ++i) {
    const double* fi = features_.data() + i * 5;
    double* ai = acc.data() + i * num_labels;
    const double* qi = qp.data() + i * num_labels;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* fj = features_.data() + j * 5;
      double d2 = 0.0;
      for (int d = 0; d < 5; ++d) {
        const double diff = fi[d] - fj[d];
        d2 += diff * diff;
      }
      const double k = std::exp(-0.5 * d2);
      double* aj = acc.data() + j * num_labels;
      const double* qj = qp.data() + j * num_labels;
      for (int l = 0; l < num_labels; ++l) {
        ai[l] += k * qj[l];
        aj[l] += k * qi[l];
      }
    }
  }
  for (int l = 0; l < num_labels; ++l)
    for (std::size_t p = 0; p < n; ++p) out[l * n + p] += w * acc[p * num_labels + l];
}

void PairwiseFilter::bilateral_grid(std::span<const double> q, int num_labels,
                                    std::vector<double>& out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  const std::size_t m = vertex_count_;
  const double w = params_.w_bilateral;
  std::vector<double> splat(m * num_labels, 0.0);
  for (std::size_t p = 0; p < n; ++p)
    for (int l = 0; l < num_labels; ++l) splat[vertex_of_[p] * num_labels + l] += q[l * n + p];
  std::vector<double> blurred(splat);  // self-vertex term, kernel value 1
  for (std::size_t u = 0; u < m; ++u) {
    const double* fu = vertex_features_.data() + u * 5;
    for (std::size_t v = u + 1; v < m; ++v) {
      const double* fv = vertex_features_.data() + v * 5;
      double d2 = 0.0;
      for (int d = 0; d < 5; ++d) {
        const double diff = fu[d] - fv[d];
        d2 += diff * diff;
      }
      if (d2 > 50.0) continue;  // kernel below 1.4e-11
      const double k = std::exp(-0.5 * d2);
      for (int l = 0; l < num_labels; ++l) {
        blurred[u * num_labels + l] += k * splat[v * num_labels + l];
        blurred[v * num_labels + l] += k * splat[u * num_labels + l];
      }
    }
  }
  for (int l = 0; l < num_labels; ++l)
    for (std::size_t p = 0; p < n; ++p)
      out[l * n + p] += w * (blurred[vertex_of_[p] * num_labels + l] - q[l * n + p]);
}

void PairwiseFilter::apply(std::span<const double> q, int num_labels,
                           std::vector<double>& out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  out.assign(n * num_labels, 0.0);
  if (params_.w_smooth != 0.0) smooth(q, num_labels, out);
  if (params_.w_bilateral != 0.0) {
    if (path_ == MessagePath::kExact)
      bilateral_exact(q, num_labels, out);
    else
      bilateral_grid(q, num_labels, out);
  }
}

// ---------------------------------------------------------------------------

std::vector<double> mean_field(const ImageRecord& image, const UnaryField& unary,
                               const CrfParams& params, MessagePath path,
                               const MeanFieldObserver& observer) {
  if (unary.height != image.height || unary.width != image.width)
    throw ShapeMismatch("unary field does not match the image");
  if (params.iterations < 0) throw DegenerateInput("CRF iterations must be non-negative");
  const std::size_t n = unary.pixels();
  const int labels = unary.num_labels;
  std::vector<double> q = unary.probs;
  const bool pairwise = params.w_smooth != 0.0 || params.w_bilateral != 0.0;
  if (!pairwise || labels < 2) {
    // Without pairwise terms the unary is already the fixed point.
    for (int it = 1; it <= params.iterations; ++it)
      if (observer) observer(it, q);
    return q;
  }

  const PairwiseFilter filter(image, params, path);
  std::vector<double> message;
  std::vector<double> logits(labels);
  for (int it = 1; it <= params.iterations; ++it) {
    filter.apply(q, labels, message);
    for (std::size_t p = 0; p < n; ++p) {
      double top = -std::numeric_limits<double>::infinity();
      for (int l = 0; l < labels; ++l) {
        logits[l] = message[l * n + p];
        top = std::max(top, logits[l]);
      }
      double z = 0.0;
      for (int l = 0; l < labels; ++l) {
        logits[l] = unary.probs[l * n + p] * std::exp(logits[l] - top);
        z += logits[l];
      }
      if (!(z > 0.0) || !std::isfinite(z))
        throw NonFinite("mean-field normaliser degenerated at iteration " + std::to_string(it));
      for (int l = 0; l < labels; ++l) q[l * n + p] = logits[l] / z;
    }
    if (observer) observer(it, q);
  }
  return q;
}

SegmentationMap dense_crf(const ImageRecord& image, const UnaryField& unary,
                          const CrfParams& params, MessagePath path) {
  const auto q = mean_field(image, unary, params, path);
  return argmax_labels(q, unary);
}

SegmentationMap dense_crf_per_region(const ImageRecord& image, const SegmentationMap& coarse,
                                     std::span<const int> active_labels,
                                     const CrfParams& params) {
  std::vector<int> labels(active_labels.begin(), active_labels.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.size() < 2) return coarse;
  const std::size_t n = static_cast<std::size_t>(coarse.labels.height) * coarse.labels.width;
  for (auto v : coarse.labels.data)
    if (!std::binary_search(labels.begin(), labels.end(), v))
      throw UnknownLabel("label " + std::to_string(v) + " is not among the active labels");

  std::vector<double> best(n, -1.0);
  SegmentationMap out;
  out.labels = Grid<std::int32_t>(coarse.labels.height, coarse.labels.width, labels.front());
  out.palette = coarse.palette;
  for (int label : labels) {
    SegmentationMap binary;
    binary.labels = Grid<std::int32_t>(coarse.labels.height, coarse.labels.width);
    for (std::size_t p = 0; p < n; ++p) binary.labels.data[p] = coarse.labels.data[p] == label;
    const int both[2] = {0, 1};
    const auto unary = labels_to_unary(binary, both, params.unary_confidence);
    const auto q = mean_field(image, unary, params);
    for (std::size_t p = 0; p < n; ++p) {
      const double fg = q[n + p];
      if (fg > best[p]) {
        best[p] = fg;
        out.labels.data[p] = label;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kNeighbourDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighbourDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

}  // namespace

std::vector<double> pamr_affinity(const ImageRecord& image, std::span<const int> dilations) {
  const int h = image.height, w = image.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const int dn = static_cast<int>(dilations.size());
  const int k = 8 * dn;
  std::vector<double> aff(n * k, 0.0);
  if (k == 0) return aff;
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };

  std::vector<double> logits(k);
  std::vector<double> window(9 * dn);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(logits.begin(), logits.end(), 0.0);
      for (int c = 0; c < 3; ++c) {
        // local standard deviation over the 3x3 window of every dilation
        // (unbiased), replicate padding
        int idx = 0;
        for (int di = 0; di < dn; ++di) {
          const int d = dilations[di];
          for (int wy = -1; wy <= 1; ++wy)
            for (int wx = -1; wx <= 1; ++wx)
              window[idx++] = image.at(clamp_y(y + wy * d), clamp_x(x + wx * d), c);
        }
        const double mean = std::accumulate(window.begin(), window.end(), 0.0) / window.size();
        double var = 0.0;
        for (double v : window) var += (v - mean) * (v - mean);
        const double sd = window.size() > 1 ? std::sqrt(var / (window.size() - 1)) : 0.0;
        const double centre = image.at(y, x, c);
        for (int di = 0; di < dn; ++di) {
          const int d = dilations[di];
          for (int j = 0; j < 8; ++j) {
            const double v =
                image.at(clamp_y(y + kNeighbourDy[j] * d), clamp_x(x + kNeighbourDx[j] * d), c);
            logits[di * 8 + j] += -std::abs(centre - v) / (1e-8 + 0.1 * sd) / 3.0;
          }
        }
      }
      const double top = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double& v : logits) {
        v = std::exp(v - top);
        z += v;
      }
      double* row = aff.data() + (static_cast<std::size_t>(y) * w + x) * k;
      for (int j = 0; j < k; ++j) row[j] = logits[j] / z;
    }
  }
  return aff;
}

std::vector<double> pamr_scores(const ImageRecord& image, const UnaryField& unary,
                                int iterations, std::span<const int> dilations) {
  if (unary.height != image.height || unary.width != image.width)
    throw ShapeMismatch("unary field does not match the image");
  std::vector<double> scores = unary.probs;
  if (iterations <= 0 || dilations.empty()) return scores;
  const int h = image.height, w = image.width;
  const std::size_t n = unary.pixels();
  const int dn = static_cast<int>(dilations.size());
  const int k = 8 * dn;
  const auto aff = pamr_affinity(image, dilations);

  // neighbour index table, replicate padding
  std::vector<std::int32_t> neighbour(n * k);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int di = 0; di < dn; ++di)
        for (int j = 0; j < 8; ++j) {
          const int yy = std::clamp(y + kNeighbourDy[j] * dilations[di], 0, h - 1);
          const int xx = std::clamp(x + kNeighbourDx[j] * dilations[di], 0, w - 1);
          neighbour[(static_cast<std::size_t>(y) * w + x) * k + di * 8 + j] = yy * w + xx;
        }

  std::vector<double> next(scores.size());
  for (int it = 0; it < iterations; ++it) {
    for (int l = 0; l < unary.num_labels; ++l) {
      const double* src = scores.data() + l * n;
      double* dst = next.data() + l * n;
      for (std::size_t p = 0; p < n; ++p) {
        const double* a = aff.data() + p * k;
        const std::int32_t* nb = neighbour.data() + p * k;
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += a[j] * src[nb[j]];
        dst[p] = acc;
      }
    }
    std::swap(scores, next);
  }
  return scores;
}

SegmentationMap pamr(const ImageRecord& image, const UnaryField& unary, int iterations,
                     std::span<const int> dilations) {
  return argmax_labels(pamr_scores(image, unary, iterations, dilations), unary);
}

}  // namespace freeseg
