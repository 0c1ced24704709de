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

#include "freeseg/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "freeseg/errors.hpp"

namespace freeseg {
using nlohmann::json;

std::string to_string(MapKind kind) {
  return kind == MapKind::kFeature ? "feature" : "attention";
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw ShapeMismatch("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
    na += static_cast<double>(a.values[i]) * a.values[i];
    nb += static_cast<double>(b.values[i]) * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

EmbeddingVector normalized(std::vector<float> values, EmbeddingSource source) {
  double norm = 0;
  for (float v : values) {
    if (!std::isfinite(v)) throw NonFinite("embedding contains a non-finite value");
    norm += static_cast<double>(v) * v;
  }
  norm = std::sqrt(norm);
  if (values.empty() || norm == 0) throw NonFinite("embedding has zero norm");
  for (float& v : values) v = static_cast<float>(v / norm);
  return {std::move(values), source};
}

Tensor resize_bilinear(const Tensor& map, int size) {
  if (map.shape.size() != 3 || map.shape[1] != map.shape[2])
    throw ShapeMismatch("expected a square C x r x r map");
  const int channels = static_cast<int>(map.shape[0]);
  const int in = static_cast<int>(map.shape[1]);
  if (in == size) return map;

  struct Tap {
    int lo, hi;
    float w;
  };
  std::vector<Tap> taps(size);
  const double scale = static_cast<double>(in) / size;
  for (int i = 0; i < size; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(src - lo)};
  }

  Tensor out;
  out.shape = {channels, size, size};
  out.data.resize(static_cast<std::size_t>(channels) * size * size);
  for (int c = 0; c < channels; ++c) {
    const float* src = map.data.data() + static_cast<std::size_t>(c) * in * in;
    float* dst = out.data.data() + static_cast<std::size_t>(c) * size * size;
    for (int y = 0; y < size; ++y) {
      const Tap& ty = taps[y];
      for (int x = 0; x < size; ++x) {
        const Tap& tx = taps[x];
        const float top = src[ty.lo * in + tx.lo] * (1 - tx.w) + src[ty.lo * in + tx.hi] * tx.w;
        const float bot = src[ty.hi * in + tx.lo] * (1 - tx.w) + src[ty.hi * in + tx.hi] * tx.w;
        dst[y * size + x] = top * (1 - ty.w) + bot * ty.w;
      }
    }
  }
  return out;
}

FeatureStack extract_features(FeatureClient* client, const ImageRecord& image,
                              const FeatureRequest& request, int grid_size) {
  if (!client) throw BackendUnavailable("no feature extractor configured and no cache");
  if (grid_size < 1) throw ShapeMismatch("grid_size must be positive");
  if (request.timestep < 0) throw ShapeMismatch("timestep must be non-negative");
  if (request.resolutions.empty()) throw ShapeMismatch("no feature resolutions requested");

  const std::set<int> wanted(request.resolutions.begin(), request.resolutions.end());
  std::vector<FeatureMap> maps;
  for (auto& m : client->extract(image, request)) {
    const auto& s = m.tensor.shape;
    if (s.size() != 3 || s[1] != s[2] || s[1] != m.native_resolution || s[0] <= 0 ||
        Tensor::element_count(s) != static_cast<std::int64_t>(m.tensor.data.size())) {
      std::ostringstream os;
      os << "client returned a " << to_string(m.kind) << " map declared at resolution "
         << m.native_resolution << " with shape [";
      for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
      os << "]";
      throw ShapeMismatch(os.str());
    }
    if (!wanted.count(m.native_resolution)) continue;
    if (m.kind == MapKind::kAttention && !request.include_attention) continue;
    maps.push_back(std::move(m));
  }
  for (int r : wanted) {
    const bool found = std::any_of(maps.begin(), maps.end(), [r](const FeatureMap& m) {
      return m.native_resolution == r && m.kind == MapKind::kFeature;
    });
    if (!found)
      throw ShapeMismatch("client returned no feature map at resolution " + std::to_string(r));
  }
  std::stable_sort(maps.begin(), maps.end(), [](const FeatureMap& a, const FeatureMap& b) {
    if (a.native_resolution != b.native_resolution)
      return a.native_resolution < b.native_resolution;
    if (a.kind != b.kind) return a.kind == MapKind::kFeature;
    return a.block < b.block;
  });

  FeatureStack stack;
  stack.image_id = image.id;
  stack.grid_size = grid_size;
  stack.timestep = request.timestep;
  std::size_t total_channels = 0;
  for (const auto& m : maps) total_channels += m.channels();
  const std::size_t cells = static_cast<std::size_t>(grid_size) * grid_size;
  stack.concat = MatrixF(cells, total_channels);
  std::size_t col = 0;
  for (const auto& m : maps) {
    const Tensor resized = resize_bilinear(m.tensor, grid_size);
    const int channels = m.channels();
    for (int c = 0; c < channels; ++c) {
      const float* plane = resized.data.data() + static_cast<std::size_t>(c) * cells;
      for (std::size_t cell = 0; cell < cells; ++cell) stack.concat(cell, col + c) = plane[cell];
    }
    col += channels;
  }
  stack.maps = std::move(maps);
  return stack;
}

std::string caption_image(CaptionClient* client, const ImageRecord& image) {
  if (!client) throw BackendUnavailable("no captioner configured and no cached caption");
  std::string text = client->caption(image);
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) throw EmptyCaption("captioner returned an empty caption for '" + image.id + "'");
  return text;
}

EmbeddingVector embed_image(EmbeddingClient* client, const ImageRecord& image) {
  if (!client) throw BackendUnavailable("no image-text embedder configured and no cache");
  return normalized(client->embed_image(image), EmbeddingSource::kImage);
}

EmbeddingVector embed_text(EmbeddingClient* client, const std::string& text) {
  if (!client) throw BackendUnavailable("no image-text embedder configured and no cache");
  return normalized(client->embed_text(text), EmbeddingSource::kText);
}

namespace cache_keys {

std::string feature(const std::string& backbone, int timestep, MapKind kind,
                    int resolution, int block) {
  std::ostringstream os;
  os << "feat_" << backbone << "_t" << timestep << "_" << to_string(kind) << "_r"
     << resolution << "_b" << block;
  return os.str();
}

std::string caption(const ImageRecord& image) {
  return "caption_" + content_hash(image).substr(0, 24);
}

std::string image_embedding(const ImageRecord& image) {
  return "embimg_" + content_hash(image).substr(0, 24);
}

std::string text_embedding(const std::string& text) {
  return "embtxt_" + content_hash(std::string_view(text)).substr(0, 24);
}

}  // namespace cache_keys

// ---------------------------------------------------------------------------

ReplayBackend::ReplayBackend(std::shared_ptr<TensorCache> cache, std::string backbone)
    : cache_(std::move(cache)), backbone_(std::move(backbone)) {}

Backends ReplayBackend::as_backends(std::shared_ptr<ReplayBackend> replay) {
  return {replay, replay, replay};
}

std::vector<FeatureMap> ReplayBackend::extract(const ImageRecord& image,
                                               const FeatureRequest& request) {
  std::vector<FeatureMap> maps;
  std::set<std::pair<int, MapKind>> present;
  for (const auto& info : cache_->list(image.id)) {
    const auto& meta = info.meta;
    if (meta.value("backbone", "") != backbone_) continue;
    if (meta.value("timestep", -1) != request.timestep) continue;
    const int res = meta.value("resolution", 0);
    const MapKind kind =
        meta.value("kind", "feature") == "attention" ? MapKind::kAttention : MapKind::kFeature;
    if (std::find(request.resolutions.begin(), request.resolutions.end(), res) ==
        request.resolutions.end())
      continue;
    if (kind == MapKind::kAttention && !request.include_attention) continue;
    auto tensor = cache_->get(image.id, info.key);
    if (!tensor) continue;
    maps.push_back({res, kind, meta.value("block", 0), std::move(*tensor)});
    present.insert({res, kind});
  }
  for (int r : request.resolutions) {
    const bool miss = !present.count({r, MapKind::kFeature}) ||
                      (request.include_attention && !present.count({r, MapKind::kAttention}));
    if (miss) {
      std::ostringstream os;
      os << "cache miss for features of '" << image.id << "' (backbone " << backbone_
         << ", t=" << request.timestep << ", resolution " << r
         << (request.include_attention ? ", with attention" : "")
         << ") and no model backend configured";
      throw BackendUnavailable(os.str());
    }
  }
  return maps;
}

std::string ReplayBackend::caption(const ImageRecord& image) {
  auto text = cache_->get_text(image.id, cache_keys::caption(image));
  if (!text)
    throw BackendUnavailable("no cached caption for '" + image.id +
                             "' and no captioner configured");
  return *text;
}

std::vector<float> ReplayBackend::embed_image(const ImageRecord& image) {
  auto t = cache_->get(image.id, cache_keys::image_embedding(image));
  if (!t)
    throw BackendUnavailable("no cached image embedding for a view of '" + image.id +
                             "' and no embedder configured");
  return std::move(t->data);
}

std::vector<float> ReplayBackend::embed_text(const std::string& text) {
  auto t = cache_->get(cache_keys::kTextBucket, cache_keys::text_embedding(text));
  if (!t)
    throw BackendUnavailable("no cached text embedding for \"" + text +
                             "\" and no embedder configured");
  return std::move(t->data);
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(Backends live, std::shared_ptr<TensorCache> cache,
                                   std::string backbone)
    : live_(std::move(live)),
      replay_(cache, backbone),
      cache_(std::move(cache)),
      backbone_(std::move(backbone)) {}

Backends RecordingBackend::as_backends(std::shared_ptr<RecordingBackend> recording) {
  return {recording, recording, recording};
}

std::vector<FeatureMap> RecordingBackend::extract(const ImageRecord& image,
                                                  const FeatureRequest& request) {
  try {
    return replay_.extract(image, request);
  } catch (const BackendUnavailable&) {
  } catch (const CorruptEntry&) {
  }
  if (!live_.features) throw BackendUnavailable("no feature extractor configured");
  ++live_calls_;
  auto maps = live_.features->extract(image, request);
  for (const auto& m : maps) {
    const json meta = {{"backbone", backbone_},
                       {"timestep", request.timestep},
                       {"kind", to_string(m.kind)},
                       {"resolution", m.native_resolution},
                       {"block", m.block}};
    cache_->put(image.id,
                cache_keys::feature(backbone_, request.timestep, m.kind, m.native_resolution,
                                    m.block),
                m.tensor, meta);
  }
  return maps;
}

std::string RecordingBackend::caption(const ImageRecord& image) {
  try {
    return replay_.caption(image);
  } catch (const BackendUnavailable&) {
  } catch (const CorruptEntry&) {
  }
  if (!live_.captioner) throw BackendUnavailable("no captioner configured");
  ++live_calls_;
  std::string text = live_.captioner->caption(image);
  cache_->put_text(image.id, cache_keys::caption(image), text);
  return text;
}

std::vector<float> RecordingBackend::embed_image(const ImageRecord& image) {
  try {
    return replay_.embed_image(image);
  } catch (const BackendUnavailable&) {
  } catch (const CorruptEntry&) {
  }
  if (!live_.embedder) throw BackendUnavailable("no embedder configured");
  ++live_calls_;
  auto values = live_.embedder->embed_image(image);
  Tensor t{{static_cast<std::int64_t>(values.size())}, values};
  cache_->put(image.id, cache_keys::image_embedding(image), t, {{"source", "image"}});
  return values;
}

std::vector<float> RecordingBackend::embed_text(const std::string& text) {
  try {
    return replay_.embed_text(text);
  } catch (const BackendUnavailable&) {
  } catch (const CorruptEntry&) {
  }
  if (!live_.embedder) throw BackendUnavailable("no embedder configured");
  ++live_calls_;
  auto values = live_.embedder->embed_text(text);
  Tensor t{{static_cast<std::int64_t>(values.size())}, values};
  cache_->put(cache_keys::kTextBucket, cache_keys::text_embedding(text), t,
              {{"source", "text"}, {"text", text}});
  return values;
}

}  // namespace freeseg
