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

#include "freeseg/pipeline.hpp"

#include <gtest/gtest.h>

#include <set>

#include "freeseg/errors.hpp"
#include "synthetic.hpp"

namespace freeseg {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> voc_classes() {
  return read_class_list(fs::path(FREESEG_DATA) / "classes" / "voc21.txt");
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    backend_ = std::make_shared<testing::SyntheticBackend>();
    for (const char* name : {"bird", "dog", "cat"}) {
      scenes_.push_back(testing::make_scene(name, name));
      backend_->add_scene(scenes_.back());
    }
  }

  Pipeline make(PipelineConfig c) const {
    return Pipeline(std::move(c), testing::synthetic_backends(backend_), voc_classes());
  }

  // Fraction of ground-truth pixels of `label` that the prediction gets right.
  static double recall(const testing::Scene& s, const SegmentationMap& pred, int label) {
    const auto gt = testing::voc_ground_truth(s);
    std::size_t hit = 0, total = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt.data[i] != label) continue;
      ++total;
      hit += pred.labels.data[i] == label;
    }
    return total ? static_cast<double>(hit) / total : 0.0;
  }

  std::shared_ptr<testing::SyntheticBackend> backend_;
  std::vector<testing::Scene> scenes_;
};

TEST_F(PipelineTest, ClosedVocabularyNamesTheBird) {
  PipelineConfig c;
  c.refinement = Refinement::kNone;
  const auto r = make(c).segment(scenes_[0].image);
  EXPECT_EQ(r.caption, "A small bird perched on a branch of a tree");
  EXPECT_EQ(r.entities.keywords, (std::vector<std::string>{"bird", "branch", "tree"}));
  EXPECT_TRUE(r.candidates.contains(3));
  EXPECT_EQ(r.labels.labels.data, r.coarse.labels.data);
  EXPECT_EQ(r.labels.labels.height, scenes_[0].image.height);
  EXPECT_GT(recall(scenes_[0], r.labels, 3), 0.8);
  // Every label is 0 or a candidate.
  for (auto v : r.labels.labels.data) EXPECT_TRUE(v == 0 || r.candidates.contains(v)) << v;
}

TEST_F(PipelineTest, MasksPartitionTheImage) {
  PipelineConfig c;
  c.refinement = Refinement::kNone;
  const auto r = make(c).segment(scenes_[1].image);
  EXPECT_EQ(r.clusters.k, 4);
  EXPECT_LE(r.mask_labels.size(), 4u);
  EXPECT_EQ(r.cluster_map.height, scenes_[1].image.height);
  for (const auto& m : r.mask_labels) {
    std::size_t pixels = 0;
    for (std::size_t i = 0; i < r.cluster_map.size(); ++i) {
      if (r.cluster_map.data[i] != m.mask_id) continue;
      ++pixels;
      ASSERT_EQ(r.coarse.labels.data[i], m.class_index);
    }
    EXPECT_GT(pixels, 0u);
  }
}

TEST_F(PipelineTest, RefinementKeepsLabelSet) {
  for (auto method : {Refinement::kCrf, Refinement::kCrfPerRegion, Refinement::kPamr}) {
    PipelineConfig c;
    c.refinement = method;
    c.pamr.iterations = 3;
    const auto r = make(c).segment(scenes_[2].image);
    std::set<int> allowed{0};
    allowed.insert(r.coarse.labels.data.begin(), r.coarse.labels.data.end());
    for (auto v : r.labels.labels.data) ASSERT_TRUE(allowed.count(v)) << to_string(method);
    EXPECT_GT(recall(scenes_[2], r.labels, 8), 0.7) << to_string(method);
  }
}

TEST_F(PipelineTest, DeterministicForFixedSeed) {
  PipelineConfig c;
  const auto p = make(c);
  const auto a = p.segment(scenes_[1].image);
  const auto b = p.segment(scenes_[1].image);
  EXPECT_EQ(a.labels.labels.data, b.labels.labels.data);
  EXPECT_EQ(a.clusters.assignments, b.clusters.assignments);
}

TEST_F(PipelineTest, OpenVocabularyUsesKeywords) {
  PipelineConfig c;
  c.candidate_mode = CandidateMode::kOpen;
  c.refinement = Refinement::kNone;
  const auto r = Pipeline(c, testing::synthetic_backends(backend_), {}).segment(scenes_[0].image);
  EXPECT_EQ(r.candidates.dataset_classes,
            (std::vector<std::string>{"unlabeled", "bird", "branch", "tree"}));
  std::set<int> seen(r.labels.labels.data.begin(), r.labels.labels.data.end());
  EXPECT_TRUE(seen.count(1));
}

TEST_F(PipelineTest, WithoutCaptionEveryClassIsACandidate) {
  PipelineConfig c;
  c.use_caption = false;
  c.refinement = Refinement::kNone;
  const auto r = make(c).segment(scenes_[0].image);
  EXPECT_TRUE(r.caption.empty());
  EXPECT_EQ(r.candidates.candidates.size(), 20u);
}

TEST_F(PipelineTest, ConfigurationErrors) {
  PipelineConfig c;
  EXPECT_THROW(Pipeline(c, testing::synthetic_backends(backend_), {"cat", "dog"}), ConfigError);
  c.k = 0;
  EXPECT_THROW(make(c), ConfigError);
}

TEST_F(PipelineTest, ReplayOnEmptyCacheIsBackendUnavailable) {
  PipelineConfig c;
  c.cache_root = fs::temp_directory_path() / "freeseg_pipeline_empty_cache";
  fs::remove_all(c.cache_root);
  EXPECT_THROW(Pipeline(c, make_backends(c), voc_classes()), BackendUnavailable);
  c.backend = "carrier-pigeon";
  EXPECT_THROW(make_backends(c), ConfigError);
}

TEST_F(PipelineTest, ReplaysShippedFixtures) {
  PipelineConfig c;
  c.cache_root = fs::path(FREESEG_FIXTURES) / "cache";
  const auto p = Pipeline(c, make_backends(c), voc_classes());
  const auto image = read_image(fs::path(FREESEG_FIXTURES) / "images" / "bird.png");
  const auto replayed = p.segment(image);
  const auto live = make(c).segment(image);
  EXPECT_EQ(replayed.labels.labels.data, live.labels.labels.data);
  EXPECT_EQ(replayed.caption, live.caption);
}

}  // namespace
}  // namespace freeseg
