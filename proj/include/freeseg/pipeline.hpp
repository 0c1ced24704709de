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

#include <memory>
#include <string>
#include <vector>

#include "freeseg/assignment.hpp"
#include "freeseg/backbones.hpp"
#include "freeseg/clustering.hpp"
#include "freeseg/config.hpp"
#include "freeseg/vocabulary.hpp"

namespace freeseg {

struct StageTimings {
  double caption_s = 0.0;
  double features_s = 0.0;
  double clustering_s = 0.0;
  double classification_s = 0.0;
  double refinement_s = 0.0;
  double total_s = 0.0;
};

struct SegmentResult {
  std::string image_id;
  std::string caption;  // empty when the caption stage is off
  EntityList entities;
  CandidateClassSet candidates;
  ClusterResult clusters;
  Grid<std::uint8_t> cluster_map;  // cluster id per pixel
  std::vector<MaskLabel> mask_labels;
  SegmentationMap coarse;
  SegmentationMap labels;          // after refinement
  StageTimings timings;
};

// Builds the configured backbone clients: replay over the cache, or the HTTP
// model server behind a recording cache.
Backends make_backends(const PipelineConfig& config);

// Caption -> candidates -> features -> clusters -> named masks -> refinement.
// segment() is const and may be called from several threads.
class Pipeline {
 public:
  // `classes` is the closed vocabulary ([0] == "unlabeled"); it may be empty
  // in open mode. Class prompt embeddings are computed here, once.
  Pipeline(PipelineConfig config, Backends backends, std::vector<std::string> classes = {});

  SegmentResult segment(const ImageRecord& image) const;

  const PipelineConfig& config() const { return config_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const Backends& backends() const { return backends_; }

 private:
  CandidateClassSet candidates_for(const std::string& caption, const EntityList& entities,
                                   std::vector<EmbeddingVector>& table) const;
  SegmentationMap refine(const ImageRecord& image, const SegmentationMap& coarse) const;

  PipelineConfig config_;
  Backends backends_;
  std::vector<std::string> classes_;
  std::vector<EmbeddingVector> class_table_;
};

}  // namespace freeseg
