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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

enum class Tag { kNoun, kDeterminer, kNumber, kAdjective, kVerb, kFunction, kUnknown };

const std::unordered_set<std::string>& nouns() {
  static const std::unordered_set<std::string> set = {
      // VOC and COCO object words
      "aeroplane", "airplane", "plane", "jet", "aircraft", "bicycle", "bike", "bird", "boat",
      "ship", "bottle", "bus", "car", "cat", "kitten", "chair", "cow", "calf", "table", "dog",
      "puppy", "horse", "pony", "motorbike", "motorcycle", "scooter", "person", "man", "woman",
      "boy", "girl", "child", "kid", "baby", "people", "player", "rider", "plant", "sheep",
      "lamb", "sofa", "couch", "train", "locomotive", "tv", "television", "monitor", "screen",
      "truck", "van", "traffic", "light", "hydrant", "sign", "meter", "bench", "elephant",
      "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag", "bag", "purse", "tie",
      "suitcase", "luggage", "frisbee", "ski", "snowboard", "ball", "kite", "bat", "glove",
      "skateboard", "surfboard", "board", "racket", "racquet", "glass", "cup", "mug", "fork",
      "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange", "broccoli", "carrot",
      "hotdog", "pizza", "donut", "doughnut", "cake", "bed", "toilet", "laptop", "computer",
      "mouse", "remote", "keyboard", "phone", "cellphone", "microwave", "oven", "toaster",
      "sink", "refrigerator", "fridge", "book", "clock", "vase", "scissors", "teddy", "toy",
      "hair", "drier", "dryer", "toothbrush", "animal", "vehicle", "furniture",
      // scene and stuff words common in captions
      "branch", "tree", "bush", "flower", "grass", "field", "lawn", "garden", "park", "forest",
      "wood", "leaf", "sky", "cloud", "sun", "water", "sea", "ocean", "beach", "sand", "wave",
      "river", "lake", "pond", "mountain", "hill", "rock", "stone", "snow", "ice", "ground",
      "dirt", "mud", "road", "street", "sidewalk", "path", "track", "rail", "railway",
      "station", "platform", "bridge", "building", "house", "home", "tower", "city", "town",
      "wall", "floor", "ceiling", "roof", "window", "door", "fence", "gate", "pole", "post",
      "room", "kitchen", "bathroom", "bedroom", "office", "counter", "shelf", "cabinet",
      "desk", "curtain", "blanket", "pillow", "rug", "carpet", "mat", "towel", "mirror",
      "lamp", "pot", "pan", "plate", "dish", "tray", "basket", "box", "container", "jar",
      "food", "meal", "fruit", "vegetable", "meat", "bread", "drink", "wine", "beer",
      "coffee", "tea", "juice", "milk", "cheese", "egg", "salad", "soup", "rice", "pasta",
      "shirt", "jacket", "coat", "hat", "cap", "helmet", "dress", "shoe", "boot", "sunglasses",
      "wheel", "seat", "saddle", "engine", "wing", "tail", "head", "face", "eye", "hand",
      "arm", "leg", "foot", "paw", "nose", "mouth", "feather", "fur", "collar", "leash",
      "area", "side", "front", "top", "bottom", "middle", "corner", "edge", "background",
      "day", "night", "picture", "photo", "image", "view", "scene", "group", "couple",
      "pair", "herd", "flock", "bunch", "lot", "number", "row", "line", "crowd", "team",
      "game", "match", "sport", "air", "lot", "pasture", "farm", "barn", "zoo", "cage",
      "nest", "perch", "trunk", "stem", "log", "stick", "fountain", "statue", "painting",
      "poster", "paper", "letter", "newspaper", "menu", "bin", "can", "cone", "tent",
      "airport", "runway", "harbor", "dock", "pier", "shore", "coast", "island", "desert",
      "valley", "jungle", "yard", "porch", "balcony", "stairs", "stair", "step", "hallway",
      "living", "dining", "market", "store", "shop", "restaurant", "cafe", "bar", "stadium",
      "court", "pool", "tub", "bathtub", "shower", "faucet", "stove", "dishwasher", "kettle",
      "teapot", "napkin", "bouquet", "potted", "vine", "moss", "puddle", "fog", "smoke",
      "fire", "candle", "duck", "goose", "swan", "pigeon", "parrot", "owl", "eagle", "hawk",
      "gull", "seagull", "sparrow", "robin", "crow", "chicken", "hen", "rooster", "pig",
      "goat", "deer", "fox", "wolf", "lion", "tiger", "monkey", "rabbit", "squirrel",
      "fish", "turtle", "frog", "snake", "butterfly", "bee", "insect", "camel", "donkey",
      "mule", "ox", "bull", "buffalo", "sailboat", "canoe", "kayak", "yacht", "ferry",
      "taxi", "cab", "tractor", "trailer", "carriage", "wagon", "cart", "stroller",
      "wheelchair", "ambulance", "firetruck", "tram", "trolley", "subway", "jeep", "suv",
      "sedan", "minivan", "motorcyclist", "cyclist", "skier", "surfer", "skateboarder",
      "policeman", "officer", "soldier", "chef", "cook", "worker", "doctor", "student",
      "teacher", "family", "friend", "lady", "gentleman", "guy", "adult", "toddler", "infant",
      "mother", "father", "son", "daughter", "owner", "tourist", "passenger", "driver",
      "pilot", "crew", "audience", "fan", "dinner", "lunch", "breakfast", "dessert",
      "snack", "sauce", "topping", "slice", "piece", "half", "monitor", "desktop", "tablet",
      "camera", "speaker", "cord", "cable", "wire", "chandelier", "fan", "heater", "radiator",
      "armchair", "stool", "ottoman", "dresser", "wardrobe", "closet", "drawer", "cushion",
      "sheet", "quilt", "headboard", "nightstand", "bookshelf", "bookcase", "fireplace",
      "mantle", "plant", "houseplant", "planter", "flowerpot", "wreath", "garland"};
  return set;
}

const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> set = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
      "no", "another", "its", "his", "her", "their", "our", "my", "your", "all", "both",
      "either", "neither", "such", "what", "which", "whose"};
  return set;
}

const std::unordered_set<std::string>& numbers() {
  static const std::unordered_set<std::string> set = {
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
      "eleven", "twelve", "dozen", "several", "many", "few", "multiple", "numerous",
      "various", "couple", "first", "second", "third", "single", "lone", "pair"};
  return set;
}

const std::unordered_set<std::string>& adjectives() {
  static const std::unordered_set<std::string> set = {
      "small", "large", "big", "little", "tiny", "huge", "giant", "tall", "short", "long",
      "young", "old", "new", "white", "black", "red", "blue", "green", "yellow", "brown",
      "gray", "grey", "pink", "purple", "dark", "bright", "colorful", "wooden", "metal",
      "plastic", "empty", "full", "open", "closed", "close", "left", "right", "other",
      "different", "same", "cute", "fluffy", "furry", "wild", "domestic", "pretty",
      "beautiful", "nice", "clean", "dirty", "wet", "dry", "hot", "cold", "warm", "sunny",
      "cloudy", "snowy", "grassy", "sandy", "rocky", "busy", "quiet", "modern", "antique",
      "vintage", "fresh", "ripe", "delicious", "tasty", "sliced", "striped", "spotted",
      "sleek", "shiny", "low", "high", "wide", "narrow", "deep", "shallow", "thin", "thick",
      "heavy", "light-colored", "mid", "upper", "lower", "outdoor", "indoor", "urban",
      "rural", "calm", "happy", "sad", "adult", "baby", "male", "female", "electric",
      "double", "decker", "front", "back", "next", "inside", "outside", "together",
      "very", "some", "much", "more", "most", "less", "several", "own", "only", "just"};
  return set;
}

const std::unordered_set<std::string>& function_words() {
  static const std::unordered_set<std::string> set = {
      // prepositions
      "on", "in", "at", "of", "with", "by", "near", "to", "from", "under", "over", "above",
      "below", "behind", "beside", "besides", "between", "across", "through", "into",
      "onto", "upon", "within", "without", "along", "around", "against", "toward",
      "towards", "up", "down", "off", "out", "for", "about", "atop", "underneath",
      "beneath", "among", "amongst", "during", "past", "via", "like", "as",
      // conjunctions, pronouns, auxiliaries, adverbs
      "and", "or", "but", "nor", "so", "yet", "while", "when", "where", "who", "whom",
      "than", "then", "there", "here", "it", "he", "she", "they", "we", "i", "you", "him",
      "them", "us", "me", "itself", "himself", "herself", "themselves", "someone",
      "something", "somebody", "anyone", "anything", "nothing", "everything", "is", "are",
      "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does", "did",
      "can", "could", "will", "would", "shall", "should", "may", "might", "must", "not",
      "also", "too", "very", "really", "almost", "nearby", "away", "again", "still",
      "how", "why", "if", "because", "although", "though", "over", "s"};
  return set;
}

const std::unordered_set<std::string>& verbs() {
  static const std::unordered_set<std::string> set = {
      "sit", "sits", "sat", "stand", "stands", "stood", "hold", "holds", "held", "eat",
      "eats", "ate", "look", "looks", "ride", "rides", "rode", "lie", "lies", "lay", "lays",
      "fly", "flies", "flew", "walk", "walks", "run", "runs", "ran", "play", "plays",
      "rest", "rests", "perch", "perches", "wear", "wears", "wore", "carry", "carries",
      "drive", "drives", "drove", "park", "parks", "graze", "grazes", "swim", "swims",
      "cross", "crosses", "watch", "watches", "go", "goes", "went", "come", "comes",
      "show", "shows", "appear", "appears", "contain", "contains", "feature", "features",
      "fill", "fills", "cover", "covers", "surround", "surrounds", "face", "faces", "lean",
      "leans", "hang", "hangs", "hung", "pose", "poses", "wait", "waits", "seem", "seems",
      "get", "gets", "got", "make", "makes", "made", "take", "takes", "took", "use", "uses",
      "see", "sees", "seen", "climb", "climbs", "jump", "jumps", "catch", "catches",
      "throw", "throws", "kick", "kicks", "hit", "hits", "pull", "pulls", "push", "pushes",
      "prepare", "prepares", "cut", "cuts", "serve", "serves", "display", "displays",
      "sleep", "sleeps", "slept", "drink", "drinks", "smile", "smiles", "talk", "talks",
      "travel", "travels", "float", "floats", "sail", "sails", "land", "lands", "fly",
      "lying", "sitting", "standing"};
  return set;
}

const std::unordered_map<std::string, std::string>& irregular_plurals() {
  static const std::unordered_map<std::string, std::string> map = {
      {"people", "person"},   {"men", "man"},         {"women", "woman"},
      {"children", "child"},  {"mice", "mouse"},      {"geese", "goose"},
      {"teeth", "tooth"},     {"feet", "foot"},       {"oxen", "ox"},
      {"knives", "knife"},    {"leaves", "leaf"},     {"wolves", "wolf"},
      {"shelves", "shelf"},   {"loaves", "loaf"},     {"halves", "half"},
      {"calves", "calf"},     {"scarves", "scarf"},   {"wives", "wife"},
      {"lives", "life"},      {"thieves", "thief"},   {"dice", "die"},
      {"cacti", "cactus"},    {"fungi", "fungus"},    {"buses", "bus"},
      {"tomatoes", "tomato"}, {"potatoes", "potato"}, {"heroes", "hero"},
      {"ladies", "lady"},     {"puppies", "puppy"},   {"skis", "ski"},
      {"taxis", "taxi"},      {"kids", "kid"},        {"geese", "goose"}};
  return map;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < caption.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(caption[i]);
    if (std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !current.empty()) {
      // possessive or contraction: drop the suffix ("dog's" -> "dog")
      flush();
      while (i + 1 < caption.size() && std::isalpha(static_cast<unsigned char>(caption[i + 1])))
        ++i;
    } else if (c == '-' && !current.empty() && i + 1 < caption.size() &&
               std::isalpha(static_cast<unsigned char>(caption[i + 1]))) {
      current.push_back('-');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Tag tag_of(const std::string& token, const std::string& lemma) {
  if (determiners().count(token)) return Tag::kDeterminer;
  if (numbers().count(token)) return Tag::kNumber;
  if (function_words().count(token)) return Tag::kFunction;
  if (nouns().count(token) || nouns().count(lemma)) {
    // nouns that double as verbs in participle form stay nouns
    return Tag::kNoun;
  }
  if (verbs().count(token)) return Tag::kVerb;
  if (adjectives().count(token)) return Tag::kAdjective;
  if (token.find('-') != std::string::npos) return Tag::kAdjective;
  if (ends_with(token, "ing") || ends_with(token, "ed")) return Tag::kVerb;
  if (ends_with(token, "ly") || ends_with(token, "ful") || ends_with(token, "ous") ||
      ends_with(token, "ish") || ends_with(token, "ive") || ends_with(token, "able"))
    return Tag::kAdjective;
  return Tag::kUnknown;
}

}  // namespace

bool CandidateClassSet::contains(int class_index) const {
  return std::binary_search(candidates.begin(), candidates.end(), class_index);
}

KeywordDecision decide_keyword(std::span<const double> distances) {
  if (distances.empty()) throw DegenerateInput("no class distances to decide over");
  KeywordDecision d;
  d.min_distance = distances[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    sum += distances[i];
    if (distances[i] < d.min_distance) {
      d.min_distance = distances[i];
      d.argmin = static_cast<int>(i);
    }
  }
  d.mean_distance = sum / static_cast<double>(distances.size());
  // When every distance is equal, min and the floating-point mean may
  // differ in the last bit; compare against the max so the boundary
  // case is decided exactly.
  const double max_d = *std::max_element(distances.begin(), distances.end());
  d.accepted = d.min_distance <= d.mean_distance || d.min_distance == max_d;
  return d;
}

std::string singularize(std::string_view word) {
  std::string w(word);
  if (w.size() <= 3) return w;
  if (auto it = irregular_plurals().find(w); it != irregular_plurals().end()) return it->second;
  if (nouns().count(w) && !ends_with(w, "s")) return w;
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is") || ends_with(w, "ous"))
    return w;
  if (nouns().count(w) && (w == "glass" || w == "grass" || w == "scissors" || w == "sunglasses"))
    return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "sses") ||
      ends_with(w, "xes") || ends_with(w, "zes"))
    return w.substr(0, w.size() - 2);
  if (ends_with(w, "s")) {
    std::string stem = w.substr(0, w.size() - 1);
    return stem;
  }
  return w;
}

EntityList extract_entities(std::string_view caption) {
  if (caption.empty()) throw std::invalid_argument("extract_entities: caption is empty");
  EntityList out;
  out.source_caption = std::string(caption);
  const auto tokens = tokenize(caption);
  std::vector<std::string> lemmas;
  std::vector<Tag> tags;
  for (const auto& t : tokens) {
    lemmas.push_back(singularize(t));
    tags.push_back(tag_of(t, lemmas.back()));
  }
  // "bird perches", "dog sits": a verb-capable token right after a nominal
  // subject is read as the verb.
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tags[i] == Tag::kNoun && verbs().count(tokens[i]) &&
        (tags[i - 1] == Tag::kNoun || tags[i - 1] == Tag::kUnknown))
      tags[i] = Tag::kVerb;
  }
  auto nominal = [&](std::size_t i) {
    return tags[i] == Tag::kNoun || tags[i] == Tag::kUnknown;
  };
  std::set<std::string> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!nominal(i)) continue;
    bool keep = tags[i] == Tag::kNoun;
    if (tags[i] == Tag::kUnknown) {
      // Unknown words count only as the head of a noun chunk: not followed
      // by another nominal, and introduced by a determiner, number,
      // adjective or nominal.
      const bool followed = i + 1 < tokens.size() && nominal(i + 1);
      const bool introduced =
          i > 0 && (tags[i - 1] == Tag::kDeterminer || tags[i - 1] == Tag::kNumber ||
                    tags[i - 1] == Tag::kAdjective || nominal(i - 1));
      keep = !followed && introduced;
    }
    // participle-like nouns used as modifiers ("living room", "dining table")
    if (keep && tags[i] == Tag::kNoun && i + 1 < tokens.size() && tags[i + 1] == Tag::kNoun &&
        (ends_with(tokens[i], "ing") || ends_with(tokens[i], "ed")))
      keep = false;
    if (!keep) continue;
    const std::string& lemma = lemmas[i];
    if (lemma.empty() ||
        !std::all_of(lemma.begin(), lemma.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }))
      continue;
    if (seen.insert(lemma).second) out.keywords.push_back(lemma);
  }
  return out;
}

std::string apply_prompt(std::string_view prompt_template, std::string_view class_name) {
  std::string out(prompt_template);
  const auto pos = out.find("{}");
  if (pos == std::string::npos) return std::string(class_name);
  out.replace(pos, 2, class_name);
  return out;
}

std::vector<EmbeddingVector> embed_class_prompts(std::span<const std::string> classes,
                                                 const TextEmbedFn& embed,
                                                 std::string_view prompt_template) {
  std::vector<EmbeddingVector> out(classes.size());
  for (std::size_t i = 1; i < classes.size(); ++i)
    out[i] = embed(apply_prompt(prompt_template, classes[i]));
  return out;
}

CandidateClassSet match_candidates(const EntityList& entities,
                                   std::span<const std::string> dataset_classes,
                                   std::span<const EmbeddingVector> class_embeddings,
                                   const TextEmbedFn& embed) {
  if (dataset_classes.size() < 2)
    throw DegenerateInput("candidate matching needs at least one class besides 'unlabeled'");
  if (class_embeddings.size() != dataset_classes.size())
    throw ShapeMismatch("class embedding table does not match the class list");
  CandidateClassSet out;
  out.dataset_classes.assign(dataset_classes.begin(), dataset_classes.end());
  std::set<int> accepted;
  std::vector<double> distances(dataset_classes.size() - 1);
  for (const auto& keyword : entities.keywords) {
    const EmbeddingVector k = embed(keyword);
    for (std::size_t i = 1; i < dataset_classes.size(); ++i)
      distances[i - 1] = 1.0 - cosine_similarity(k, class_embeddings[i]);
    const KeywordDecision d = decide_keyword(distances);
    KeywordMatch m;
    m.keyword = keyword;
    m.nearest_class = d.argmin + 1;
    m.min_distance = d.min_distance;
    m.mean_distance = d.mean_distance;
    if (d.accepted) {
      m.matched_class = m.nearest_class;
      accepted.insert(m.nearest_class);
    }
    out.per_keyword.push_back(std::move(m));
  }
  out.candidates.assign(accepted.begin(), accepted.end());
  return out;
}

CandidateClassSet match_candidates(const EntityList& entities,
                                   std::span<const std::string> dataset_classes,
                                   const TextEmbedFn& embed, std::string_view prompt_template) {
  if (dataset_classes.size() < 2)
    throw DegenerateInput("candidate matching needs at least one class besides 'unlabeled'");
  const auto table = embed_class_prompts(dataset_classes, embed, prompt_template);
  return match_candidates(entities, dataset_classes, table, embed);
}

CandidateClassSet open_vocab_candidates(const EntityList& entities) {
  CandidateClassSet out;
  out.dataset_classes.push_back("unlabeled");
  for (const auto& k : entities.keywords) {
    out.dataset_classes.push_back(k);
    out.candidates.push_back(static_cast<int>(out.dataset_classes.size()) - 1);
    KeywordMatch m;
    m.keyword = k;
    m.nearest_class = out.candidates.back();
    m.matched_class = m.nearest_class;
    out.per_keyword.push_back(std::move(m));
  }
  return out;
}

CandidateClassSet all_candidates(std::span<const std::string> dataset_classes) {
  CandidateClassSet out;
  out.dataset_classes.assign(dataset_classes.begin(), dataset_classes.end());
  out.candidates.resize(dataset_classes.empty() ? 0 : dataset_classes.size() - 1);
  std::iota(out.candidates.begin(), out.candidates.end(), 1);
  return out;
}

std::vector<std::string> read_class_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read class list " + path.string());
  std::vector<std::string> classes;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line = line.substr(start);
    if (!line.empty()) classes.push_back(line);
  }
  if (classes.empty() || classes.front() != "unlabeled")
    throw ConfigError("class list " + path.string() + " must start with 'unlabeled'");
  return classes;
}

std::map<std::string, std::string> read_remap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read remap " + path.string());
  try {
    return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("remap " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace freeseg
