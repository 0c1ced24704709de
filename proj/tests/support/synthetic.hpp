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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "freeseg/backbones.hpp"
#include "freeseg/grid.hpp"
#include "freeseg/image.hpp"

namespace freeseg::testing {

// A named colour region of a synthetic scene.
struct Prototype {
  std::array<std::uint8_t, 3> rgb;
  std::string concept_text;  // what the image embedder "sees"
  int voc_label = 0;         // ground-truth class in VOC space
};

struct Scene {
  std::string id;
  std::string caption;
  std::vector<Prototype> prototypes;
  ImageRecord image;
  Grid<std::int32_t> owner;  // prototype index per pixel
};

// Deterministic fixture scenes: "bird" (120x90), "dog" (100x80), "cat" (96x72).
Scene make_scene(const std::string& name, const std::string& id);

// VOC-style ground truth with a one-pixel void (255) outline around objects.
Grid<std::uint8_t> voc_ground_truth(const Scene& scene);

// Stand-in for the three frozen models. Features are pooled colour
// statistics, captions come from the registered scenes, text embeddings are
// bags of hashed word vectors and image embeddings mix the concepts of the
// prototypes visible in the image.
class SyntheticBackend : public FeatureClient, public CaptionClient, public EmbeddingClient {
 public:
  static constexpr int kDim = 64;

  void add_scene(const Scene& scene);

  std::vector<FeatureMap> extract(const ImageRecord& image, const FeatureRequest& request) override;
  std::string caption(const ImageRecord& image) override;
  std::vector<float> embed_image(const ImageRecord& image) override;
  std::vector<float> embed_text(const std::string& text) override;

  static std::vector<float> word_vector(const std::string& word);

 private:
  const Scene* find(const std::string& id) const;
  std::vector<Scene> scenes_;
};

Backends synthetic_backends(std::shared_ptr<SyntheticBackend> backend);

}  // namespace freeseg::testing
