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

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freeseg/backbones.hpp"

namespace freeseg {

struct EntityList {
  std::vector<std::string> keywords;  // lowercase singular nouns, first occurrence order
  std::string source_caption;
};

struct KeywordMatch {
  std::string keyword;
  int nearest_class = 0;               // argmin over non-unlabeled classes
  std::optional<int> matched_class;    // set iff the keyword was accepted
  double min_distance = 0.0;
  double mean_distance = 0.0;
};

struct CandidateClassSet {
  std::vector<std::string> dataset_classes;  // [0] == "unlabeled"
  std::vector<int> candidates;               // sorted, unique, each in [1, |classes|)
  std::vector<KeywordMatch> per_keyword;

  bool contains(int class_index) const;
};

// Outcome of the mean-distance filter for one keyword.
struct KeywordDecision {
  int argmin = 0;  // position in the distance list, lowest index on ties
  double min_distance = 0.0;
  double mean_distance = 0.0;
  bool accepted = false;  // min <= mean
};

KeywordDecision decide_keyword(std::span<const double> distances);

// Lexicon-driven tagger: keeps nouns and noun-phrase heads, lowercases,
// singularizes and deduplicates. Throws std::invalid_argument on an empty
// caption.
EntityList extract_entities(std::string_view caption);

// Lemmatizes one lowercase token to its singular form.
std::string singularize(std::string_view word);

inline constexpr std::string_view kDefaultPromptTemplate = "a photo of a {}";
std::string apply_prompt(std::string_view prompt_template, std::string_view class_name);

using TextEmbedFn = std::function<EmbeddingVector(const std::string&)>;

// Text embeddings of prompt(class) for every dataset class, computed once.
// Entry 0 (unlabeled) is left empty.
std::vector<EmbeddingVector> embed_class_prompts(std::span<const std::string> classes,
                                                 const TextEmbedFn& embed,
                                                 std::string_view prompt_template =
                                                     kDefaultPromptTemplate);

// Closed-vocabulary candidate selection. For every keyword, cosine
// distances to all non-unlabeled classes decide the nearest class, kept
// only if its distance does not exceed the mean distance. Class names go
// through the prompt template, keywords are embedded as they are.
CandidateClassSet match_candidates(const EntityList& entities,
                                   std::span<const std::string> dataset_classes,
                                   const TextEmbedFn& embed,
                                   std::string_view prompt_template = kDefaultPromptTemplate);
CandidateClassSet match_candidates(const EntityList& entities,
                                   std::span<const std::string> dataset_classes,
                                   std::span<const EmbeddingVector> class_embeddings,
                                   const TextEmbedFn& embed);

// Open vocabulary: the keywords themselves become the class list.
CandidateClassSet open_vocab_candidates(const EntityList& entities);

// Every dataset class is a candidate (no caption gate).
CandidateClassSet all_candidates(std::span<const std::string> dataset_classes);

// One class per line, first line "unlabeled".
std::vector<std::string> read_class_list(const std::filesystem::path& path);
std::map<std::string, std::string> read_remap(const std::filesystem::path& path);

}  // namespace freeseg
