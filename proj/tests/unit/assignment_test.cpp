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

#include <gtest/gtest.h>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

ImageRecord gradient(int h, int w) {
  ImageRecord img("g", h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(y, x, 0) = static_cast<std::uint8_t>(10 * x + 1);
      img.at(y, x, 1) = static_cast<std::uint8_t>(10 * y + 1);
      img.at(y, x, 2) = 50;
    }
  return img;
}

BinaryMask mask_of(int h, int w, std::initializer_list<std::pair<int, int>> on) {
  BinaryMask m;
  m.cells = Grid<std::uint8_t>(h, w, 0);
  m.resolution = MaskResolution::kImage;
  for (auto [y, x] : on) m.cells(y, x) = 1;
  return m;
}

TEST(ApplyMask, BlackFillKeepsInsidePixels) {
  const auto img = gradient(3, 4);
  const auto m = mask_of(3, 4, {{0, 1}, {2, 3}});
  const auto out = apply_mask(img, m, MaskFill::kBlack);
  EXPECT_EQ(out.id, img.id);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c)
        EXPECT_EQ(out.at(y, x, c), m.cells(y, x) ? img.at(y, x, c) : 0);
}

TEST(ApplyMask, MeanFillUsesRegionMean) {
  const auto img = gradient(3, 4);
  const auto m = mask_of(3, 4, {{0, 0}, {0, 1}});
  const auto out = apply_mask(img, m, MaskFill::kMean);
  // red values 1 and 11, green 1 and 1, blue 50
  EXPECT_EQ(out.at(2, 2, 0), 6);
  EXPECT_EQ(out.at(2, 2, 1), 1);
  EXPECT_EQ(out.at(2, 2, 2), 50);
  EXPECT_EQ(out.at(0, 1, 0), 11);
}

TEST(ApplyMask, CropIsTheBoundingBox) {
  const auto img = gradient(5, 6);
  const auto m = mask_of(5, 6, {{1, 2}, {3, 4}});
  const auto out = apply_mask(img, m, MaskFill::kCrop);
  ASSERT_EQ(out.height, 3);
  ASSERT_EQ(out.width, 3);
  EXPECT_EQ(out.at(0, 0, 0), img.at(1, 2, 0));
  EXPECT_EQ(out.at(2, 2, 1), img.at(3, 4, 1));
  EXPECT_EQ(out.at(1, 1, 0), 0);
}

TEST(ApplyMask, Errors) {
  const auto img = gradient(3, 4);
  EXPECT_THROW(apply_mask(img, mask_of(3, 4, {})), EmptyMask);
  EXPECT_THROW(apply_mask(img, mask_of(4, 3, {{0, 0}})), ShapeMismatch);
}

CandidateClassSet classes_with(std::vector<int> candidates) {
  CandidateClassSet s;
  s.dataset_classes = {"unlabeled", "cat", "dog", "bird"};
  s.candidates = std::move(candidates);
  return s;
}

std::vector<EmbeddingVector> class_table() {
  return {EmbeddingVector{}, normalized({1, 0, 0}, EmbeddingSource::kText),
          normalized({0, 1, 0}, EmbeddingSource::kText),
          normalized({0, 0, 1}, EmbeddingSource::kText)};
}

TEST(ClassifyMask, NearestCandidateWins) {
  const auto table = class_table();
  const auto e = normalized({0.2f, 0.9f, 0.1f}, EmbeddingSource::kImage);
  const auto label = classify_mask(e, classes_with({1, 2}), table, 7);
  EXPECT_EQ(label.mask_id, 7);
  EXPECT_EQ(label.nearest_class, 2);
  EXPECT_EQ(label.class_index, 2);
  const double cos = 0.9 / std::sqrt(0.04 + 0.81 + 0.01);
  EXPECT_NEAR(label.distance, 1.0 - cos, 1e-6);
  EXPECT_FALSE(label.tie);
}

TEST(ClassifyMask, NearestOutsideCandidatesIsUnlabeled) {
  const auto table = class_table();
  const auto e = normalized({0.1f, 0.1f, 0.9f}, EmbeddingSource::kImage);
  const auto label = classify_mask(e, classes_with({1, 2}), table);
  EXPECT_EQ(label.nearest_class, 3);
  EXPECT_EQ(label.class_index, 0);
}

TEST(ClassifyMask, TieGoesToLowestIndex) {
  const auto table = class_table();
  const auto e = normalized({1, 1, 0}, EmbeddingSource::kImage);
  const auto label = classify_mask(e, classes_with({1, 2, 3}), table);
  EXPECT_EQ(label.nearest_class, 1);
  EXPECT_TRUE(label.tie);
}

TEST(ClassifyMask, Errors) {
  const auto e = normalized({1, 0, 0}, EmbeddingSource::kImage);
  CandidateClassSet only;
  only.dataset_classes = {"unlabeled"};
  std::vector<EmbeddingVector> one(1);
  EXPECT_THROW(classify_mask(e, only, one), DegenerateInput);
  auto table = class_table();
  table.pop_back();
  EXPECT_THROW(classify_mask(e, classes_with({1}), table), ShapeMismatch);
}

LabeledMask labeled(BinaryMask m, int cls, int id) {
  MaskLabel l;
  l.mask_id = id;
  l.class_index = cls;
  return LabeledMask{std::move(m), l};
}

TEST(Compose, PartitionToLabelMap) {
  std::vector<LabeledMask> masks{labeled(mask_of(2, 2, {{0, 0}, {1, 1}}), 5, 0),
                                 labeled(mask_of(2, 2, {{0, 1}, {1, 0}}), 0, 1)};
  const auto seg = compose(masks, 2, 2, {"unlabeled"});
  EXPECT_EQ(seg.labels.data, (std::vector<std::int32_t>{5, 0, 0, 5}));
  EXPECT_EQ(seg.palette, (std::vector<std::string>{"unlabeled"}));
}

TEST(Compose, OverlapAndGapsAreViolations) {
  std::vector<LabeledMask> overlap{labeled(mask_of(2, 2, {{0, 0}, {0, 1}, {1, 0}}), 1, 0),
                                   labeled(mask_of(2, 2, {{0, 0}, {1, 1}}), 2, 1)};
  EXPECT_THROW(compose(overlap, 2, 2), PartitionViolation);
  std::vector<LabeledMask> gap{labeled(mask_of(2, 2, {{0, 0}}), 1, 0)};
  EXPECT_THROW(compose(gap, 2, 2), PartitionViolation);
  std::vector<LabeledMask> wrong{labeled(mask_of(3, 2, {{0, 0}}), 1, 0)};
  EXPECT_THROW(compose(wrong, 2, 2), PartitionViolation);
}

}  // namespace
}  // namespace freeseg
