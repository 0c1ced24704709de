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

#include "freeseg/cache.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "freeseg/errors.hpp"
#include "freeseg/image.hpp"

namespace freeseg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> to_little_endian(const std::vector<float>& values) {
  std::vector<char> bytes(values.size() * 4);
  std::memcpy(bytes.data(), values.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
      std::swap(bytes[i], bytes[i + 3]);
      std::swap(bytes[i + 1], bytes[i + 2]);
    }
  }
  return bytes;
}

std::vector<float> from_little_endian(std::vector<char> bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + 3 < bytes.size(); i += 4) {
      std::swap(bytes[i], bytes[i + 3]);
      std::swap(bytes[i + 1], bytes[i + 2]);
    }
  }
  std::vector<float> values(bytes.size() / 4);
  std::memcpy(values.data(), bytes.data(), values.size() * 4);
  return values;
}

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream os;
  os << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
     << "." << counter.fetch_add(1);
  return os.str();
}

void write_atomically(const fs::path& target, const char* data, std::size_t size) {
  const fs::path tmp = target.string() + unique_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename to " + target.string() + " failed: " + ec.message());
}

void check_names(std::string_view image_id, std::string_view key) {
  if (!TensorCache::is_safe_name(image_id))
    throw IoError("cache image id is not filesystem-safe: '" + std::string(image_id) + "'");
  if (!TensorCache::is_safe_name(key))
    throw IoError("cache key is not filesystem-safe: '" + std::string(key) + "'");
}

}  // namespace

std::int64_t Tensor::element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

TensorCache::TensorCache(fs::path root) : root_(std::move(root)) {}

bool TensorCache::is_safe_name(std::string_view name) {
  if (name.empty() || name.size() > 200 || name.front() == '.') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

fs::path TensorCache::manifest_path(std::string_view image_id) const {
  return root_ / std::string(image_id) / "manifest.json";
}

fs::path TensorCache::payload_path(std::string_view image_id,
                                   std::string_view key) const {
  return root_ / std::string(image_id) / (std::string(key) + ".bin");
}

std::mutex& TensorCache::lock_for(std::string_view image_id) const {
  std::lock_guard guard(locks_guard_);
  auto it = locks_.find(image_id);
  if (it == locks_.end())
    it = locks_.emplace(std::string(image_id), std::make_unique<std::mutex>()).first;
  return *it->second;
}

json TensorCache::read_manifest(std::string_view image_id) const {
  const fs::path path = manifest_path(image_id);
  std::ifstream in(path);
  if (!in) return json{{"image_id", image_id}, {"tensors", json::object()}, {"texts", json::object()}};
  try {
    json manifest = json::parse(in);
    if (!manifest.contains("tensors")) manifest["tensors"] = json::object();
    if (!manifest.contains("texts")) manifest["texts"] = json::object();
    return manifest;
  } catch (const json::exception& e) {
    throw CorruptEntry("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
}

void TensorCache::write_manifest(std::string_view image_id, const json& manifest) const {
  const std::string text = manifest.dump(1);
  write_atomically(manifest_path(image_id), text.data(), text.size());
}

void TensorCache::put(std::string_view image_id, std::string_view key,
                      const Tensor& tensor, const json& meta) {
  check_names(image_id, key);
  if (Tensor::element_count(tensor.shape) != static_cast<std::int64_t>(tensor.data.size()))
    throw ShapeMismatch("tensor '" + std::string(key) + "' data length does not match its shape");
  std::lock_guard guard(lock_for(image_id));
  fs::create_directories(root_ / std::string(image_id));
  const auto bytes = to_little_endian(tensor.data);
  write_atomically(payload_path(image_id, key), bytes.data(), bytes.size());
  json manifest = read_manifest(image_id);
  manifest["tensors"][std::string(key)] = {
      {"dtype", "float32"},
      {"shape", tensor.shape},
      {"file", std::string(key) + ".bin"},
      {"sha256", sha256_hex(bytes.data(), bytes.size())},
      {"meta", meta}};
  write_manifest(image_id, manifest);
}

std::optional<Tensor> TensorCache::get(std::string_view image_id,
                                       std::string_view key) const {
  check_names(image_id, key);
  const json manifest = read_manifest(image_id);
  const auto& tensors = manifest["tensors"];
  auto it = tensors.find(std::string(key));
  if (it == tensors.end()) return std::nullopt;
  const auto& entry = *it;
  if (entry.value("dtype", "") != "float32")
    throw CorruptEntry("entry '" + std::string(key) + "' has unsupported dtype");
  Tensor tensor;
  tensor.shape = entry.at("shape").get<std::vector<std::int64_t>>();
  const std::int64_t expected = Tensor::element_count(tensor.shape) * 4;

  const fs::path path = payload_path(image_id, key);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptEntry("payload missing for '" + std::string(key) + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (static_cast<std::int64_t>(bytes.size()) != expected) {
    std::ostringstream os;
    os << "entry '" << key << "' payload is " << bytes.size()
       << " bytes, shape requires " << expected;
    throw CorruptEntry(os.str());
  }
  if (entry.contains("sha256") &&
      entry["sha256"].get<std::string>() != sha256_hex(bytes.data(), bytes.size()))
    throw CorruptEntry("entry '" + std::string(key) + "' checksum mismatch");
  tensor.data = from_little_endian(std::move(bytes));
  return tensor;
}

void TensorCache::put_text(std::string_view image_id, std::string_view key,
                           const std::string& value) {
  check_names(image_id, key);
  std::lock_guard guard(lock_for(image_id));
  fs::create_directories(root_ / std::string(image_id));
  json manifest = read_manifest(image_id);
  manifest["texts"][std::string(key)] = value;
  write_manifest(image_id, manifest);
}

std::optional<std::string> TensorCache::get_text(std::string_view image_id,
                                                 std::string_view key) const {
  check_names(image_id, key);
  const json manifest = read_manifest(image_id);
  const auto& texts = manifest["texts"];
  auto it = texts.find(std::string(key));
  if (it == texts.end()) return std::nullopt;
  return it->get<std::string>();
}

std::vector<CacheEntryInfo> TensorCache::list(std::string_view image_id) const {
  if (!is_safe_name(image_id)) return {};
  const json manifest = read_manifest(image_id);
  std::vector<CacheEntryInfo> out;
  for (const auto& [key, entry] : manifest["tensors"].items()) {
    out.push_back({key, entry.at("shape").get<std::vector<std::int64_t>>(),
                   entry.value("meta", json::object())});
  }
  return out;
}

bool TensorCache::contains(std::string_view image_id, std::string_view key) const {
  if (!is_safe_name(image_id) || !is_safe_name(key)) return false;
  const json manifest = read_manifest(image_id);
  return manifest["tensors"].contains(std::string(key)) ||
         manifest["texts"].contains(std::string(key));
}

}  // namespace freeseg
