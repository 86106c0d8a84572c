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

#ifndef NERCTC_CONFIG_H_
#define NERCTC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "nerctc/corpus.h"
#include "nerctc/decoder.h"
#include "nerctc/net.h"

namespace nerctc {

nlohmann::json decoder_config_to_json(const DecoderConfig& cfg);
// Unknown fields throw DataError.
DecoderConfig decoder_config_from_json(const nlohmann::json& doc);

// One experiment's settings. JSON layout:
//   {"seed": 1, "out_dir": "...", "corpus": {...}, "net": {...},
//    "ner": {...net overrides for phase 2...}, "decoder": {...},
//    "rules": "path/to/rules.json", "lm_order": 3, "augment_weight": 1.0}
struct RunConfig {
  uint64_t seed = 1;
  std::filesystem::path out_dir;
  CorpusSpec corpus = default_corpus_spec();
  NetConfig net;
  NetConfig ner_net;  // phase-2 settings; defaults to `net`
  DecoderConfig decoder;
  std::optional<std::filesystem::path> rules;
  int lm_order = 3;
  double augment_weight = 1.0;
  nlohmann::json ner_overrides = nlohmann::json::object();

  NetConfig net_for(Phase phase) const { return phase == Phase::kAsr ? net : ner_net; }
};

// Validates the whole document before returning. Errors are DataError and
// name the offending field, e.g. "config field 'net': net config field
// 'hidden': ...". Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
// The resolved configuration, written next to every run's outputs.
nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace nerctc

#endif  // NERCTC_CONFIG_H_
