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

#include "freeseg/assignment.hpp"

#include <algorithm>
#include <sstream>

#include "freeseg/errors.hpp"

namespace freeseg {

ImageRecord apply_mask(const ImageRecord& image, const BinaryMask& mask, MaskFill fill) {
  if (mask.cells.height != image.height || mask.cells.width != image.width)
    throw ShapeMismatch("mask is " + std::to_string(mask.cells.height) + "x" +
                        std::to_string(mask.cells.width) + ", image is " +
                        std::to_string(image.height) + "x" + std::to_string(image.width));
  if (mask.count() == 0) throw EmptyMask("mask selects no pixel of '" + image.id + "'");

  std::uint8_t background[3] = {0, 0, 0};
  if (fill == MaskFill::kMean) {
    double sum[3] = {0, 0, 0};
    std::size_t n = 0;
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        if (mask.cells(y, x)) {
          for (int c = 0; c < 3; ++c) sum[c] += image.at(y, x, c);
          ++n;
        }
    for (int c = 0; c < 3; ++c)
      background[c] = static_cast<std::uint8_t>(sum[c] / static_cast<double>(n) + 0.5);
  }

  ImageRecord out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (!mask.cells(y, x))
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = background[c];

  if (fill != MaskFill::kCrop) return out;

  int y0 = image.height, y1 = -1, x0 = image.width, x1 = -1;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (mask.cells(y, x)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  ImageRecord crop(image.id, y1 - y0 + 1, x1 - x0 + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      for (int c = 0; c < 3; ++c) crop.at(y - y0, x - x0, c) = out.at(y, x, c);
  return crop;
}

MaskLabel classify_mask(const EmbeddingVector& image_embedding, const CandidateClassSet& classes,
                        std::span<const EmbeddingVector> class_embeddings, int mask_id) {
  const auto& names = classes.dataset_classes;
  if (names.size() < 2)
    throw DegenerateInput("mask classification needs at least one class besides 'unlabeled'");
  if (class_embeddings.size() != names.size())
    throw ShapeMismatch("class embedding table does not match the class list");
  MaskLabel label;
  label.mask_id = mask_id;
  double best = 0.0;
  for (std::size_t i = 1; i < names.size(); ++i) {
    const double d = 1.0 - cosine_similarity(image_embedding, class_embeddings[i]);
    if (i == 1 || d < best) {
      best = d;
      label.nearest_class = static_cast<int>(i);
      label.tie = false;
    } else if (d == best) {
      label.tie = true;
    }
  }
  label.distance = best;
  label.class_index = classes.contains(label.nearest_class) ? label.nearest_class : 0;
  return label;
}

MaskLabel classify_mask(const ImageRecord& masked, const CandidateClassSet& classes,
                        EmbeddingClient* embedder,
                        std::span<const EmbeddingVector> class_embeddings, int mask_id) {
  return classify_mask(embed_image(embedder, masked), classes, class_embeddings, mask_id);
}

SegmentationMap compose(std::span<const LabeledMask> masks, int height, int width,
                        std::vector<std::string> palette) {
  SegmentationMap seg;
  seg.labels = Grid<std::int32_t>(height, width, -1);
  seg.palette = std::move(palette);
  for (const auto& lm : masks) {
    const auto& cells = lm.mask.cells;
    if (cells.height != height || cells.width != width)
      throw PartitionViolation("mask " + std::to_string(lm.label.mask_id) +
                               " is not at image resolution");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!cells.data[i]) continue;
      if (seg.labels.data[i] != -1) {
        std::ostringstream os;
        os << "pixel (" << i / width << "," << i % width << ") is covered by more than one mask";
        throw PartitionViolation(os.str());
      }
      seg.labels.data[i] = lm.label.class_index;
    }
  }
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    if (seg.labels.data[i] == -1) {
      std::ostringstream os;
      os << "pixel (" << i / width << "," << i % width << ") is not covered by any mask";
      throw PartitionViolation(os.str());
    }
  }
  return seg;
}

}  // namespace freeseg
