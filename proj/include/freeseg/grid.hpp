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

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace freeseg {

// Dense row-major 2-D array.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const { return data.size(); }

  T& operator()(int y, int x) {
    assert(y >= 0 && y < height && x >= 0 && x < width);
    return data[static_cast<std::size_t>(y) * width + x];
  }
  const T& operator()(int y, int x) const {
    assert(y >= 0 && y < height && x >= 0 && x < width);
    return data[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const Grid&) const = default;
};

// Dense row-major matrix; rows are samples, columns are channels.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  T* row(std::size_t r) { return data.data() + r * cols; }
  const T* row(std::size_t r) const { return data.data() + r * cols; }

  bool operator==(const Matrix&) const = default;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

enum class MaskResolution { kFeatureGrid, kImage };

struct BinaryMask {
  Grid<std::uint8_t> cells;
  MaskResolution resolution = MaskResolution::kFeatureGrid;

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : cells.data) n += v != 0;
    return n;
  }
};

// Per-pixel class indices at image resolution; index 0 is "unlabeled".
struct SegmentationMap {
  Grid<std::int32_t> labels;
  std::vector<std::string> palette;
};

}  // namespace freeseg
