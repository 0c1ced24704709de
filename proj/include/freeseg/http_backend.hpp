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

#include <json.hpp>

#include "freeseg/backbones.hpp"

namespace freeseg {

std::string base64_encode(const void* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Wire helpers for the model-server protocol, shared with test servers.
nlohmann::json image_to_json(const ImageRecord& image);
ImageRecord image_from_json(const nlohmann::json& j);
nlohmann::json feature_map_to_json(const FeatureMap& map);
FeatureMap feature_map_from_json(const nlohmann::json& j);

// Client for an out-of-process model server speaking JSON over HTTP:
//   POST /v1/features     {image, timestep, resolutions, include_attention} -> {maps: [...]}
//   POST /v1/caption      {image}                                           -> {caption}
//   POST /v1/embed_image  {image}                                           -> {embedding}
//   POST /v1/embed_text   {text}                                            -> {embedding}
// Images travel as base64 RGB bytes, maps as base64 little-endian float32.
class HttpBackend : public FeatureClient,
                    public CaptionClient,
                    public EmbeddingClient {
 public:
  explicit HttpBackend(std::string base_url, int timeout_seconds = 300);
  ~HttpBackend() override;

  std::vector<FeatureMap> extract(const ImageRecord& image,
                                  const FeatureRequest& request) override;
  std::string caption(const ImageRecord& image) override;
  std::vector<float> embed_image(const ImageRecord& image) override;
  std::vector<float> embed_text(const std::string& text) override;

  static Backends as_backends(std::shared_ptr<HttpBackend> http);

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  std::string base_url_;
  int timeout_seconds_;
};

}  // namespace freeseg
