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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace freeseg {

// float32 tensor, row-major.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  static std::int64_t element_count(const std::vector<std::int64_t>& shape);
  bool operator==(const Tensor&) const = default;
};

struct CacheEntryInfo {
  std::string key;
  std::vector<std::int64_t> shape;
  nlohmann::json meta;
};

// On-disk tensor store:
//   <root>/<image_id>/manifest.json
//   <root>/<image_id>/<key>.bin     float32, row-major, little-endian
// The manifest also carries short text entries (captions). Writes to one
// image id are serialized and the manifest is replaced by atomic rename;
// concurrent readers always observe a complete manifest.
class TensorCache {
 public:
  explicit TensorCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void put(std::string_view image_id, std::string_view key,
           const Tensor& tensor, const nlohmann::json& meta = nlohmann::json::object());
  // nullopt on a miss; throws CorruptEntry when the payload disagrees with
  // the manifest (length or checksum).
  std::optional<Tensor> get(std::string_view image_id,
                            std::string_view key) const;

  void put_text(std::string_view image_id, std::string_view key,
                const std::string& value);
  std::optional<std::string> get_text(std::string_view image_id,
                                      std::string_view key) const;

  std::vector<CacheEntryInfo> list(std::string_view image_id) const;
  bool contains(std::string_view image_id, std::string_view key) const;

  std::filesystem::path manifest_path(std::string_view image_id) const;
  std::filesystem::path payload_path(std::string_view image_id,
                                     std::string_view key) const;

  static bool is_safe_name(std::string_view name);

 private:
  std::mutex& lock_for(std::string_view image_id) const;
  nlohmann::json read_manifest(std::string_view image_id) const;
  void write_manifest(std::string_view image_id, const nlohmann::json& manifest) const;

  std::filesystem::path root_;
  mutable std::mutex locks_guard_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>, std::less<>> locks_;
};

}  // namespace freeseg
