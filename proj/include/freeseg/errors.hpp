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

#include <stdexcept>
#include <string>

namespace freeseg {

// Base class for every error raised by the library. The CLI maps the
// category onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kBackend, kIo, kData };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

#define FREESEG_DEFINE_ERROR(Name, Cat)                                 \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what)                              \
        : Error(Category::Cat, std::string(#Name ": ") + what) {}       \
  };

FREESEG_DEFINE_ERROR(BackendUnavailable, kBackend)
FREESEG_DEFINE_ERROR(EmptyCaption, kBackend)
FREESEG_DEFINE_ERROR(ShapeMismatch, kData)
FREESEG_DEFINE_ERROR(CorruptEntry, kIo)
FREESEG_DEFINE_ERROR(DegenerateInput, kData)
FREESEG_DEFINE_ERROR(NonFinite, kData)
FREESEG_DEFINE_ERROR(EmptyMask, kData)
FREESEG_DEFINE_ERROR(PartitionViolation, kData)
FREESEG_DEFINE_ERROR(UnknownLabel, kData)
FREESEG_DEFINE_ERROR(MissingAnnotation, kIo)
FREESEG_DEFINE_ERROR(CorruptRle, kData)
FREESEG_DEFINE_ERROR(EmptyAccumulator, kData)
FREESEG_DEFINE_ERROR(ConfigError, kConfig)
FREESEG_DEFINE_ERROR(IoError, kIo)

#undef FREESEG_DEFINE_ERROR

}  // namespace freeseg
