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

#include <span>
#include <string>
#include <vector>

#include "freeseg/backbones.hpp"
#include "freeseg/grid.hpp"
#include "freeseg/image.hpp"
#include "freeseg/vocabulary.hpp"

namespace freeseg {

// How pixels outside a mask are presented to the image embedder.
enum class MaskFill {
  kBlack,  // outside pixels set to 0, full frame
  kMean,   // outside pixels set to the mean colour of the masked region
  kCrop,   // black fill, then cropped to the mask's bounding box
};

struct MaskLabel {
  int mask_id = 0;
  int class_index = 0;    // 0 when the nearest class is not a candidate
  int nearest_class = 0;
  double distance = 0.0;  // cosine distance to nearest_class
  bool tie = false;       // another class was exactly as close
};

struct LabeledMask {
  BinaryMask mask;  // image resolution
  MaskLabel label;
};

// Throws EmptyMask for an all-false mask and ShapeMismatch when the mask
// and image disagree in size. The result keeps the source image id.
ImageRecord apply_mask(const ImageRecord& image, const BinaryMask& mask,
                       MaskFill fill = MaskFill::kBlack);

// Nearest class over every non-unlabeled dataset class, gated by the
// candidate set. class_embeddings is indexed like classes.dataset_classes.
MaskLabel classify_mask(const EmbeddingVector& image_embedding,
                        const CandidateClassSet& classes,
                        std::span<const EmbeddingVector> class_embeddings, int mask_id = 0);

MaskLabel classify_mask(const ImageRecord& masked, const CandidateClassSet& classes,
                        EmbeddingClient* embedder,
                        std::span<const EmbeddingVector> class_embeddings, int mask_id = 0);

// Paints each mask with its class. Throws PartitionViolation if the
// masks overlap or leave a pixel uncovered.
SegmentationMap compose(std::span<const LabeledMask> masks, int height, int width,
                        std::vector<std::string> palette = {});

}  // namespace freeseg
