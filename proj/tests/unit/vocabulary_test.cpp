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

#include "freeseg/vocabulary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

using Words = std::vector<std::string>;

TEST(ExtractEntities, CaptionExamples) {
  EXPECT_EQ(extract_entities("A small bird perched on a branch of a tree").keywords,
            (Words{"bird", "branch", "tree"}));
  EXPECT_EQ(extract_entities("two dogs and a dog").keywords, (Words{"dog"}));
  EXPECT_EQ(extract_entities("A dog sitting on a sofa next to a potted plant").keywords,
            (Words{"dog", "sofa", "plant"}));
  EXPECT_EQ(extract_entities("a man riding a horse on the beach").keywords,
            (Words{"man", "horse", "beach"}));
  EXPECT_EQ(extract_entities("Three sheep grazing in a green field.").keywords,
            (Words{"sheep", "field"}));
  EXPECT_EQ(extract_entities("a cat sleeps on the couch in the living room").keywords,
            (Words{"cat", "couch", "room"}));
  EXPECT_EQ(extract_entities("people and children walking past buses").keywords,
            (Words{"person", "child", "bus"}));
}

TEST(ExtractEntities, KeepsCaptionAndHandlesNoNouns) {
  const EntityList e = extract_entities("it is very nice");
  EXPECT_TRUE(e.keywords.empty());
  EXPECT_EQ(e.source_caption, "it is very nice");
  EXPECT_THROW(extract_entities(""), std::invalid_argument);
}

TEST(ExtractEntities, UnknownNounChunkHead) {
  // "quokka" is not in the lexicon but heads a noun chunk.
  EXPECT_EQ(extract_entities("a quokka next to a tree").keywords, (Words{"quokka", "tree"}));
}

TEST(Singularize, Rules) {
  EXPECT_EQ(singularize("dogs"), "dog");
  EXPECT_EQ(singularize("buses"), "bus");
  EXPECT_EQ(singularize("benches"), "bench");
  EXPECT_EQ(singularize("ponies"), "pony");
  EXPECT_EQ(singularize("knives"), "knife");
  EXPECT_EQ(singularize("children"), "child");
  EXPECT_EQ(singularize("mice"), "mouse");
  EXPECT_EQ(singularize("sheep"), "sheep");
  EXPECT_EQ(singularize("glass"), "glass");
  EXPECT_EQ(singularize("bus"), "bus");
}

TEST(DecideKeyword, ArgminAndMean) {
  const std::vector<double> d{0.5, 0.2, 0.9, 0.2};
  const KeywordDecision k = decide_keyword(d);
  EXPECT_EQ(k.argmin, 1);  // lowest index among ties
  EXPECT_DOUBLE_EQ(k.min_distance, 0.2);
  EXPECT_DOUBLE_EQ(k.mean_distance, 0.45);
  EXPECT_TRUE(k.accepted);
}

TEST(DecideKeyword, AllEqualBoundaryAccepts) {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 0.7, 1.0}) {
    const std::vector<double> d(21, v);
    const auto k = decide_keyword(d);
    EXPECT_TRUE(k.accepted) << v;
    EXPECT_EQ(k.argmin, 0);
  }
  EXPECT_THROW(decide_keyword(std::vector<double>{}), DegenerateInput);
}

// Embedder over a fixed table of hand-built vectors.
TextEmbedFn table_embedder(std::map<std::string, std::vector<float>> table) {
  return [table](const std::string& text) {
    auto it = table.find(text);
    if (it == table.end()) throw BackendUnavailable("no vector for " + text);
    return normalized(it->second, EmbeddingSource::kText);
  };
}

TEST(MatchCandidates, IdenticalVectorMatchesWithZeroDistance) {
  const Words classes{"unlabeled", "cat", "dog", "bird"};
  auto embed = table_embedder({{"a photo of a cat", {1, 0, 0}},
                               {"a photo of a dog", {0, 1, 0}},
                               {"a photo of a bird", {0, 0, 1}},
                               {"dog", {0, 1, 0}}});
  EntityList e;
  e.keywords = {"dog"};
  const auto set = match_candidates(e, classes, embed);
  ASSERT_EQ(set.per_keyword.size(), 1u);
  const auto& m = set.per_keyword[0];
  EXPECT_EQ(m.nearest_class, 2);
  ASSERT_TRUE(m.matched_class.has_value());
  EXPECT_EQ(*m.matched_class, 2);
  EXPECT_NEAR(m.min_distance, 0.0, 1e-12);
  // Scalar oracle: distances {1, 0, 1}.
  EXPECT_NEAR(m.mean_distance, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(set.candidates, (std::vector<int>{2}));
}

TEST(MatchCandidates, SynonymReachesItsClass) {
  const Words classes{"unlabeled", "chair", "couch", "tv"};
  auto embed = table_embedder({{"a photo of a chair", {1, 0.2f, 0}},
                               {"a photo of a couch", {0.2f, 1, 0}},
                               {"a photo of a tv", {0, 0, 1}},
                               {"sofa", {0.3f, 0.9f, 0.1f}}});
  EntityList e;
  e.keywords = {"sofa"};
  const auto set = match_candidates(e, classes, embed);
  EXPECT_EQ(set.candidates, (std::vector<int>{2}));
  EXPECT_TRUE(set.contains(2));
  EXPECT_FALSE(set.contains(1));
}

TEST(MatchCandidates, OrthogonalKeywordIsAcceptedAtBoundary) {
  const Words classes{"unlabeled", "a", "b"};
  auto embed = table_embedder(
      {{"a photo of a a", {1, 0, 0}}, {"a photo of a b", {0, 1, 0}}, {"z", {0, 0, 1}}});
  EntityList e;
  e.keywords = {"z"};
  const auto set = match_candidates(e, classes, embed);
  EXPECT_EQ(set.per_keyword[0].min_distance, set.per_keyword[0].mean_distance);
  EXPECT_EQ(set.candidates, (std::vector<int>{1}));
}

TEST(MatchCandidates, ClassNamesArePromptedKeywordsAreNot) {
  std::vector<std::string> seen;
  TextEmbedFn embed = [&](const std::string& t) {
    seen.push_back(t);
    return normalized({1, static_cast<float>(t.size())}, EmbeddingSource::kText);
  };
  EntityList e;
  e.keywords = {"dog"};
  match_candidates(e, Words{"unlabeled", "dog", "potted plant"}, embed, "itap of a {}");
  EXPECT_EQ(seen, (Words{"itap of a dog", "itap of a potted plant", "dog"}));
}

TEST(MatchCandidates, AddingAFartherClassKeepsTheMatch) {
  std::mt19937 rng(11);
  std::normal_distribution<float> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EmbeddingVector> table(1);
    Words classes{"unlabeled"};
    for (int c = 0; c < 6; ++c) {
      std::vector<float> v(8);
      for (auto& x : v) x = n(rng);
      table.push_back(normalized(v, EmbeddingSource::kText));
      classes.push_back("c" + std::to_string(c));
    }
    std::vector<float> kv(8);
    for (auto& x : kv) x = n(rng);
    const auto key = normalized(kv, EmbeddingSource::kText);
    EntityList e;
    e.keywords = {"k"};
    auto embed = [&](const std::string&) { return key; };
    const auto before = match_candidates(e, classes, table, embed);
    // The antipode of the keyword is farther than every existing class.
    std::vector<float> anti(key.values);
    for (auto& x : anti) x = -x;
    table.push_back(normalized(anti, EmbeddingSource::kText));
    classes.push_back("far");
    const auto after = match_candidates(e, classes, table, embed);
    EXPECT_EQ(before.per_keyword[0].nearest_class, after.per_keyword[0].nearest_class);
  }
}

TEST(MatchCandidates, NeedsAClass) {
  EntityList e;
  e.keywords = {"dog"};
  auto embed = [](const std::string&) { return normalized({1, 0}, EmbeddingSource::kText); };
  EXPECT_THROW(match_candidates(e, Words{"unlabeled"}, embed), DegenerateInput);
}

TEST(OpenVocab, PassThrough) {
  EntityList e;
  e.keywords = {"bird", "tree"};
  const auto set = open_vocab_candidates(e);
  EXPECT_EQ(set.dataset_classes, (Words{"unlabeled", "bird", "tree"}));
  EXPECT_EQ(set.candidates, (std::vector<int>{1, 2}));
  const auto empty = open_vocab_candidates(EntityList{});
  EXPECT_EQ(empty.dataset_classes, (Words{"unlabeled"}));
  EXPECT_TRUE(empty.candidates.empty());
}

TEST(ClassFiles, BundledListsAndRemap) {
  const std::filesystem::path data = FREESEG_DATA;
  const auto voc = read_class_list(data / "classes" / "voc21.txt");
  EXPECT_EQ(voc.size(), 21u);
  EXPECT_EQ(voc[0], "unlabeled");
  EXPECT_EQ(read_class_list(data / "classes" / "coco81.txt").size(), 81u);
  const auto coco27 = read_class_list(data / "classes" / "coco27.txt");
  EXPECT_EQ(coco27.size(), 28u);
  const auto remap = read_remap(data / "coco27_remap.json");
  EXPECT_EQ(remap.size(), 80u);
  EXPECT_EQ(remap.at("dog"), "animal");
  EXPECT_EQ(remap.at("couch"), "furniture");
  EXPECT_EQ(remap.at("toaster"), "appliance");
  for (const auto& [fine, coarse] : remap)
    EXPECT_NE(std::find(coco27.begin(), coco27.end(), coarse), coco27.end()) << fine;
}

TEST(ClassFiles, FirstLineMustBeUnlabeled) {
  const auto path = std::filesystem::temp_directory_path() / "freeseg_bad_classes.txt";
  {
    std::ofstream out(path);
    out << "cat\ndog\n";
  }
  EXPECT_THROW(read_class_list(path), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace freeseg
