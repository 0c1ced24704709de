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

#include <algorithm>
#include <chrono>
#include <set>

#include "freeseg/errors.hpp"
#include "freeseg/http_backend.hpp"
#include "freeseg/refine.hpp"

namespace freeseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

Backends make_backends(const PipelineConfig& config) {
  auto cache = std::make_shared<TensorCache>(config.cache_root);
  if (config.backend == "http") {
    auto http = std::make_shared<HttpBackend>(
        config.backend_url, std::max(1, static_cast<int>(config.backend_timeout_s)));
    auto recording = std::make_shared<RecordingBackend>(HttpBackend::as_backends(http), cache,
                                                        config.backbone);
    return RecordingBackend::as_backends(recording);
  }
  if (config.backend == "replay")
    return ReplayBackend::as_backends(std::make_shared<ReplayBackend>(cache, config.backbone));
  throw ConfigError("unknown backend '" + config.backend + "'");
}

Pipeline::Pipeline(PipelineConfig config, Backends backends, std::vector<std::string> classes)
    : config_(std::move(config)), backends_(std::move(backends)), classes_(std::move(classes)) {
  config_.validate();
  if (config_.candidate_mode == CandidateMode::kClosed) {
    if (classes_.size() < 2 || classes_[0] != "unlabeled")
      throw ConfigError("closed vocabulary needs a class list starting with 'unlabeled'");
    EmbeddingClient* embedder = backends_.embedder.get();
    class_table_ = embed_class_prompts(
        classes_, [embedder](const std::string& t) { return embed_text(embedder, t); },
        config_.prompt_template);
  }
}

CandidateClassSet Pipeline::candidates_for(const std::string& caption, const EntityList& entities,
                                           std::vector<EmbeddingVector>& table) const {
  EmbeddingClient* embedder = backends_.embedder.get();
  auto embed_prompted = [&](const std::string& word) {
    return embed_text(embedder, apply_prompt(config_.prompt_template, word));
  };
  if (config_.candidate_mode == CandidateMode::kOpen) {
    CandidateClassSet set = open_vocab_candidates(entities);
    table.assign(set.dataset_classes.size(), EmbeddingVector{});
    for (std::size_t i = 1; i < set.dataset_classes.size(); ++i)
      table[i] = embed_prompted(set.dataset_classes[i]);
    return set;
  }
  table = class_table_;
  if (!config_.use_caption) return all_candidates(classes_);
  if (caption.empty() || entities.keywords.empty()) {
    CandidateClassSet none;
    none.dataset_classes = classes_;
    return none;
  }
  return match_candidates(entities, classes_, class_table_,
                          [&](const std::string& word) { return embed_text(embedder, word); });
}

SegmentationMap Pipeline::refine(const ImageRecord& image, const SegmentationMap& coarse) const {
  if (config_.refinement == Refinement::kNone) return coarse;
  std::set<int> active{0};
  for (auto v : coarse.labels.data) active.insert(v);
  const std::vector<int> labels(active.begin(), active.end());
  SegmentationMap out;
  switch (config_.refinement) {
    case Refinement::kCrf:
      out = dense_crf(image, labels_to_unary(coarse, labels, config_.crf.unary_confidence),
                      config_.crf);
      break;
    case Refinement::kCrfPerRegion:
      out = dense_crf_per_region(image, coarse, labels, config_.crf);
      break;
    case Refinement::kPamr:
      out = pamr(image, labels_to_unary(coarse, labels, config_.crf.unary_confidence),
                 config_.pamr.iterations, config_.pamr.dilations);
      break;
    case Refinement::kNone:
      break;
  }
  out.palette = coarse.palette;
  return out;
}

SegmentResult Pipeline::segment(const ImageRecord& image) const {
  image.validate();
  const auto t_start = Clock::now();
  SegmentResult r;
  r.image_id = image.id;

  auto t0 = Clock::now();
  const bool want_caption =
      config_.candidate_mode == CandidateMode::kOpen || config_.use_caption;
  if (want_caption) {
    r.caption = caption_image(backends_.captioner.get(), image);
    r.entities = extract_entities(r.caption);
  }
  std::vector<EmbeddingVector> table;
  r.candidates = candidates_for(r.caption, r.entities, table);
  r.timings.caption_s = seconds_since(t0);

  t0 = Clock::now();
  FeatureRequest request;
  request.timestep = config_.timestep;
  request.resolutions = config_.resolutions;
  request.include_attention = config_.include_attention;
  const FeatureStack stack =
      extract_features(backends_.features.get(), image, request, config_.grid_size);
  r.timings.features_s = seconds_since(t0);

  t0 = Clock::now();
  r.clusters = cluster_features(stack, config_.k, config_.seed, config_.standardize,
                                config_.max_iters, config_.tol);
  r.cluster_map = upsample_nearest(assignment_grid(r.clusters, config_.grid_size), image.height,
                                   image.width);
  r.timings.clustering_s = seconds_since(t0);

  t0 = Clock::now();
  const auto grid_masks = binarize(r.clusters, config_.grid_size);
  std::vector<LabeledMask> labeled;
  for (std::size_t i = 0; i < grid_masks.size(); ++i) {
    BinaryMask mask = upsample_nearest(grid_masks[i], image.height, image.width);
    // A cluster can vanish when the image is smaller than the grid.
    if (mask.count() == 0) continue;
    MaskLabel label;
    label.mask_id = static_cast<int>(i);
    if (r.candidates.dataset_classes.size() >= 2) {
      const ImageRecord masked = apply_mask(image, mask, config_.mask_fill);
      label = classify_mask(masked, r.candidates, backends_.embedder.get(), table,
                            static_cast<int>(i));
    }
    r.mask_labels.push_back(label);
    labeled.push_back(LabeledMask{std::move(mask), label});
  }
  r.coarse = compose(labeled, image.height, image.width, r.candidates.dataset_classes);
  r.timings.classification_s = seconds_since(t0);

  t0 = Clock::now();
  r.labels = refine(image, r.coarse);
  r.timings.refinement_s = seconds_since(t0);
  r.timings.total_s = seconds_since(t_start);
  return r;
}

}  // namespace freeseg
