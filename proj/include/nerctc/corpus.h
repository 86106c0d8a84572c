// Copyright 2026 The nerctc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NERCTC_CORPUS_H_
#define NERCTC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "nerctc/alphabet.h"

namespace nerctc {

// T x F, one row per 20 ms frame.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Split { kTrain, kDev, kTest };
std::string_view split_name(Split s);
Split split_from_name(std::string_view name);  // throws DataError

struct Utterance {
  std::string id;
  std::filesystem::path features_path;
  FeatureMatrix features;
  std::string plain;
  std::string tagged;
  Split split = Split::kTrain;
  std::string source = "gold";  // "gold" or "augmented"
};

// A sentence frame around one entity, e.g. {"le sculpteur", "est mort"}.
struct SlotTemplate {
  std::string before;
  std::string after;
};

struct CorpusSpec {
  uint64_t seed = 1;
  std::map<Split, int> counts = {
      {Split::kTrain, 2000}, {Split::kDev, 200}, {Split::kTest, 200}};
  int feature_dim = 16;
  double noise = 0.3;
  int min_duration = 2;
  int max_duration = 5;
  std::u32string base_chars{kFrenchBaseChars};
  std::map<Category, double> category_weights;
  std::map<Category, std::vector<std::string>> gazetteers;
  std::map<Category, std::vector<SlotTemplate>> templates;
  // Entity-free clauses that may precede or follow an entity frame.
  std::vector<std::string> fillers;
  int min_entities = 1;
  int max_entities = 2;
  double filler_probability = 0.3;

  // Throws DataError with the offending field on violations.
  void validate() const;
};

// Desk-scale defaults: category weights follow a broadcast-news entity
// frequency profile, small French gazetteers and templates.
CorpusSpec default_corpus_spec();
// The frequency profile alone (pers 22115, func 6628, ...).
std::map<Category, double> reference_category_weights();

nlohmann::json corpus_spec_to_json(const CorpusSpec& spec);
// Missing fields keep their default_corpus_spec() values; unknown fields
// are rejected.
CorpusSpec corpus_spec_from_json(const nlohmann::json& doc);

// Mixes a master seed with a stream index (splitmix64 finalizer).
uint64_t derive_seed(uint64_t master, uint64_t index);

struct GeneratedCorpus {
  std::vector<Utterance> utterances;
  // Entity records as generated, parallel to `utterances`.
  std::vector<std::vector<Entity>> entities;
};

GeneratedCorpus generate_corpus(const CorpusSpec& spec);

// Per-character prototype vectors derived from the spec's master seed.
std::map<char32_t, Eigen::VectorXf> character_prototypes(const CorpusSpec& spec);

// Each character becomes d frames of prototype + N(0, noise^2), d uniform in
// [min_duration, max_duration]. Throws std::invalid_argument for markers,
// the star, or characters outside the base set.
FeatureMatrix synthesize_features(std::u32string_view chars,
                                  const CorpusSpec& spec, uint64_t seed);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Adds a gain offset drawn from `gain` to every entry and resamples the
// frame axis by a tempo factor drawn from `tempo` (linear interpolation,
// T' = max(1, round(T / r))).
FeatureMatrix perturb(const FeatureMatrix& features, Range gain, Range tempo,
                      uint64_t seed);

// Binary feature file: "NCFT", u32 version, u32 T, u32 F, T*F float32, all
// little-endian.
void write_features(const std::filesystem::path& path,
                    const FeatureMatrix& features);
FeatureMatrix read_features(const std::filesystem::path& path);

nlohmann::json utterance_record(const Utterance& u,
                                const std::filesystem::path& manifest_dir);
// Writes one JSON record per utterance; feature paths are stored relative
// to the manifest's directory. Features are not written.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<Utterance>& utterances);
// Resolves feature paths against the manifest directory. Errors name the
// utterance id.
std::vector<Utterance> read_manifest(const std::filesystem::path& path,
                                     bool load_features = true);
// Writes features under dir/feats/ and the manifest to dir/manifest.jsonl.
std::filesystem::path save_corpus(const std::filesystem::path& dir,
                                  std::vector<Utterance>& utterances);

std::vector<Utterance> select_split(const std::vector<Utterance>& all,
                                    Split split);

}  // namespace nerctc

#endif  // NERCTC_CORPUS_H_
