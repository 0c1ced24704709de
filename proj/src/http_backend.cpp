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

#include "freeseg/http_backend.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <bit>
#include <cstring>

#include "freeseg/errors.hpp"

namespace freeseg {
using nlohmann::json;

std::string base64_encode(const void* data, std::size_t size) {
  std::string out(4 * ((size + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                static_cast<const unsigned char*>(data),
                                static_cast<int>(size));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ShapeMismatch("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ShapeMismatch("malformed base64 payload");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

json image_to_json(const ImageRecord& image) {
  return {{"id", image.id},
          {"height", image.height},
          {"width", image.width},
          {"rgb_base64", base64_encode(image.pixels.data(), image.pixels.size())}};
}

ImageRecord image_from_json(const json& j) {
  ImageRecord image(j.at("id").get<std::string>(), j.at("height").get<int>(),
                    j.at("width").get<int>());
  image.pixels = base64_decode(j.at("rgb_base64").get<std::string>());
  image.validate();
  return image;
}

json feature_map_to_json(const FeatureMap& map) {
  static_assert(std::endian::native == std::endian::little,
                "wire format is little-endian float32");
  return {{"resolution", map.native_resolution},
          {"kind", to_string(map.kind)},
          {"block", map.block},
          {"shape", map.tensor.shape},
          {"data_base64", base64_encode(map.tensor.data.data(), map.tensor.data.size() * 4)}};
}

FeatureMap feature_map_from_json(const json& j) {
  FeatureMap map;
  map.native_resolution = j.at("resolution").get<int>();
  map.kind = j.value("kind", "feature") == "attention" ? MapKind::kAttention : MapKind::kFeature;
  map.block = j.value("block", 0);
  map.tensor.shape = j.at("shape").get<std::vector<std::int64_t>>();
  const auto bytes = base64_decode(j.at("data_base64").get<std::string>());
  if (static_cast<std::int64_t>(bytes.size()) != Tensor::element_count(map.tensor.shape) * 4)
    throw ShapeMismatch("feature payload length does not match its declared shape");
  map.tensor.data.resize(bytes.size() / 4);
  std::memcpy(map.tensor.data.data(), bytes.data(), bytes.size());
  return map;
}

HttpBackend::HttpBackend(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

HttpBackend::~HttpBackend() = default;

Backends HttpBackend::as_backends(std::shared_ptr<HttpBackend> http) {
  return {http, http, http};
}

json HttpBackend::post(const std::string& path, const json& body) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(10);
  client.set_read_timeout(timeout_seconds_);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res)
    throw BackendUnavailable("model server " + base_url_ + path +
                             " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendUnavailable("model server " + base_url_ + path + " returned HTTP " +
                             std::to_string(res->status) + ": " + res->body);
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendUnavailable("model server " + base_url_ + path +
                             " sent malformed JSON: " + e.what());
  }
}

namespace {

// Replies with missing or mistyped fields are a server fault.
template <typename Fn>
auto decode_reply(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw BackendUnavailable("model server reply to " + path + " is malformed: " + e.what());
  }
}

}  // namespace

std::vector<FeatureMap> HttpBackend::extract(const ImageRecord& image,
                                             const FeatureRequest& request) {
  const json reply = post("/v1/features", {{"image", image_to_json(image)},
                                           {"timestep", request.timestep},
                                           {"resolutions", request.resolutions},
                                           {"include_attention", request.include_attention}});
  return decode_reply("/v1/features", [&] {
    std::vector<FeatureMap> maps;
    for (const auto& m : reply.at("maps")) maps.push_back(feature_map_from_json(m));
    return maps;
  });
}

std::string HttpBackend::caption(const ImageRecord& image) {
  const json reply = post("/v1/caption", {{"image", image_to_json(image)}});
  return decode_reply("/v1/caption", [&] { return reply.at("caption").get<std::string>(); });
}

std::vector<float> HttpBackend::embed_image(const ImageRecord& image) {
  const json reply = post("/v1/embed_image", {{"image", image_to_json(image)}});
  return decode_reply("/v1/embed_image",
                      [&] { return reply.at("embedding").get<std::vector<float>>(); });
}

std::vector<float> HttpBackend::embed_text(const std::string& text) {
  const json reply = post("/v1/embed_text", {{"text", text}});
  return decode_reply("/v1/embed_text",
                      [&] { return reply.at("embedding").get<std::vector<float>>(); });
}

}  // namespace freeseg
