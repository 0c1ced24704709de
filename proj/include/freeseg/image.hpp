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
#include <filesystem>
#include <string>
#include <vector>

#include "freeseg/grid.hpp"

namespace freeseg {

// 8-bit RGB image, interleaved HxWx3.
struct ImageRecord {
  std::string id;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  ImageRecord() = default;
  ImageRecord(std::string image_id, int h, int w);

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  // Throws ShapeMismatch unless H,W >= 8 and the buffer is HxWx3.
  void validate() const;

  bool operator==(const ImageRecord&) const = default;
};

// Hex SHA-256 over dimensions and pixel bytes.
std::string content_hash(const ImageRecord& image);
std::string content_hash(std::string_view text);
std::string sha256_hex(const void* data, std::size_t size);

using Palette = std::vector<std::array<std::uint8_t, 3>>;

// Standard VOC colour map, 256 entries.
const Palette& voc_palette();

// Image id is the file stem. Accepts PNG (any colour type) and JPEG.
ImageRecord read_image(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const ImageRecord& image);
void write_jpeg(const std::filesystem::path& path, const ImageRecord& image,
                int quality = 95);

// Paletted PNG I/O. read_label_png returns raw palette indices (or grey
// values for 8-bit greyscale files) so VOC void=255 survives.
Grid<std::uint8_t> read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path,
                     const Grid<std::uint8_t>& labels,
                     const Palette& palette = voc_palette());

// Blends a colourised label map over the image.
ImageRecord overlay(const ImageRecord& image, const Grid<std::int32_t>& labels,
                    double alpha = 0.5, const Palette& palette = voc_palette());

}  // namespace freeseg
