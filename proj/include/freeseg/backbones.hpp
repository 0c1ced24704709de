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

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "freeseg/cache.hpp"
#include "freeseg/grid.hpp"
#include "freeseg/image.hpp"

namespace freeseg {

enum class MapKind { kFeature, kAttention };

std::string to_string(MapKind kind);

// One backbone activation: channels x r x r at its native resolution.
struct FeatureMap {
  int native_resolution = 0;
  MapKind kind = MapKind::kFeature;
  int block = 0;  // client-declared block order
  Tensor tensor;  // shape {C, r, r}

  int channels() const { return tensor.shape.empty() ? 0 : static_cast<int>(tensor.shape[0]); }
};

struct FeatureStack {
  std::string image_id;
  std::vector<FeatureMap> maps;
  int grid_size = 32;
  int timestep = 0;
  MatrixF concat;  // (grid_size^2) x C
};

struct FeatureRequest {
  int timestep = 0;
  std::vector<int> resolutions{16};
  bool include_attention = false;
};

enum class EmbeddingSource { kImage, kText };

struct EmbeddingVector {
  std::vector<float> values;
  EmbeddingSource source = EmbeddingSource::kText;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
// Scales to unit L2 norm; throws NonFinite for a zero or non-finite vector.
EmbeddingVector normalized(std::vector<float> values, EmbeddingSource source);

// Frozen diffusion backbone. Returns maps at any subset of resolutions; the
// caller filters and validates them.
class FeatureClient {
 public:
  virtual ~FeatureClient() = default;
  virtual std::vector<FeatureMap> extract(const ImageRecord& image,
                                          const FeatureRequest& request) = 0;
};

class CaptionClient {
 public:
  virtual ~CaptionClient() = default;
  virtual std::string caption(const ImageRecord& image) = 0;
};

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  virtual std::vector<float> embed_image(const ImageRecord& image) = 0;
  virtual std::vector<float> embed_text(const std::string& text) = 0;
};

// The three frozen models. Any member may be null, which surfaces as
// BackendUnavailable when the corresponding operation is requested.
struct Backends {
  std::shared_ptr<FeatureClient> features;
  std::shared_ptr<CaptionClient> captioner;
  std::shared_ptr<EmbeddingClient> embedder;
};

// Resamples one C x r x r map to C x size x size with half-pixel-centred
// bilinear interpolation (edge clamped).
Tensor resize_bilinear(const Tensor& map, int size);

// Runs the feature client, keeps the requested maps in canonical order
// (resolution ascending, features before attention, then block order) and
// builds the grid_size^2 x C concatenated matrix.
FeatureStack extract_features(FeatureClient* client, const ImageRecord& image,
                              const FeatureRequest& request, int grid_size = 32);

std::string caption_image(CaptionClient* client, const ImageRecord& image);
EmbeddingVector embed_image(EmbeddingClient* client, const ImageRecord& image);
EmbeddingVector embed_text(EmbeddingClient* client, const std::string& text);

// Cache key conventions shared by the replay and recording adapters.
namespace cache_keys {
std::string feature(const std::string& backbone, int timestep, MapKind kind,
                    int resolution, int block);
std::string caption(const ImageRecord& image);
std::string image_embedding(const ImageRecord& image);
std::string text_embedding(const std::string& text);
inline constexpr const char* kTextBucket = "_text";
}  // namespace cache_keys

// Serves features, captions and embeddings purely from a TensorCache; every
// miss is BackendUnavailable.
class ReplayBackend : public FeatureClient,
                      public CaptionClient,
                      public EmbeddingClient {
 public:
  ReplayBackend(std::shared_ptr<TensorCache> cache, std::string backbone = "sd15");

  std::vector<FeatureMap> extract(const ImageRecord& image,
                                  const FeatureRequest& request) override;
  std::string caption(const ImageRecord& image) override;
  std::vector<float> embed_image(const ImageRecord& image) override;
  std::vector<float> embed_text(const std::string& text) override;

  static Backends as_backends(std::shared_ptr<ReplayBackend> replay);

 private:
  std::shared_ptr<TensorCache> cache_;
  std::string backbone_;
};

// Read-through/write-through cache in front of live clients. Corrupt
// entries are treated as misses and overwritten.
class RecordingBackend : public FeatureClient,
                         public CaptionClient,
                         public EmbeddingClient {
 public:
  RecordingBackend(Backends live, std::shared_ptr<TensorCache> cache,
                   std::string backbone = "sd15");

  std::vector<FeatureMap> extract(const ImageRecord& image,
                                  const FeatureRequest& request) override;
  std::string caption(const ImageRecord& image) override;
  std::vector<float> embed_image(const ImageRecord& image) override;
  std::vector<float> embed_text(const std::string& text) override;

  static Backends as_backends(std::shared_ptr<RecordingBackend> recording);

  // Number of requests that reached the live clients.
  int live_calls() const { return live_calls_; }

 private:
  Backends live_;
  ReplayBackend replay_;
  std::shared_ptr<TensorCache> cache_;
  std::string backbone_;
  std::atomic<int> live_calls_{0};
};

}  // namespace freeseg
