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

#include "nerctc/config.h"

#include <filesystem>
#include <fstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "nerctc/error.h"

namespace nerctc {
namespace {

using ::testing::HasSubstr;

std::string error_of(const nlohmann::json& doc) {
  try {
    run_config_from_json(doc);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfig, DefaultsFromEmptyDocument) {
  const RunConfig r = run_config_from_json(nlohmann::json::object());
  EXPECT_EQ(r.seed, 1u);
  EXPECT_EQ(r.lm_order, 3);
  EXPECT_EQ(r.net.hidden, NetConfig{}.hidden);
  EXPECT_EQ(r.ner_net.hidden, r.net.hidden);
  EXPECT_FALSE(r.rules.has_value());
}

TEST(RunConfig, SeedPropagates) {
  const RunConfig r = run_config_from_json({{"seed", 42}});
  EXPECT_EQ(r.net.seed, 42u);
  EXPECT_EQ(r.corpus.seed, 42u);
  const RunConfig s = run_config_from_json({{"seed", 42}, {"net", {{"seed", 7}}}});
  EXPECT_EQ(s.net.seed, 7u);
}

TEST(RunConfig, NerOverridesMergeOverNet) {
  const RunConfig r = run_config_from_json(
      {{"net", {{"hidden", 32}, {"epochs", 4}}}, {"ner", {{"epochs", 9}}}});
  EXPECT_EQ(r.net.epochs, 4);
  EXPECT_EQ(r.ner_net.epochs, 9);
  EXPECT_EQ(r.ner_net.hidden, 32);
  EXPECT_EQ(r.net_for(Phase::kAsr).epochs, 4);
  EXPECT_EQ(r.net_for(Phase::kNer).epochs, 9);
}

TEST(RunConfig, ErrorsNameTheField) {
  EXPECT_THAT(error_of({{"sed", 1}}), HasSubstr("'sed'"));
  EXPECT_THAT(error_of({{"lm_order", 0}}), HasSubstr("'lm_order'"));
  EXPECT_THAT(error_of({{"lm_order", "three"}}), HasSubstr("'lm_order'"));
  EXPECT_THAT(error_of({{"augment_weight", -1}}), HasSubstr("'augment_weight'"));
  EXPECT_THAT(error_of({{"net", {{"hiden", 3}}}}), HasSubstr("'hiden'"));
  EXPECT_THAT(error_of({{"net", {{"hidden", 0}}}}), HasSubstr("hidden"));
  EXPECT_THAT(error_of({{"ner", {{"learning_rate", -1}}}}), HasSubstr("'ner'"));
  EXPECT_THAT(error_of({{"decoder", {{"beam_width", 0}}}}), HasSubstr("beam_width"));
  EXPECT_THAT(error_of({{"net", {{"feature_dim", 8}}}}), HasSubstr("feature_dim"));
  EXPECT_THAT(error_of({{"corpus", {{"noise", -1}}}}), HasSubstr("noise"));
}

TEST(RunConfig, JsonRoundTrip) {
  const RunConfig r = run_config_from_json(
      {{"seed", 3}, {"net", {{"hidden", 16}}}, {"ner", {{"epochs", 2}}},
       {"decoder", {{"alpha", 0.7}, {"beam_width", 12}}}, {"rules", "r.json"},
       {"lm_order", 2}, {"augment_weight", 0.5}});
  const nlohmann::json j = run_config_to_json(r);
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(run_config_to_json(back), j);
  EXPECT_EQ(back.decoder.beam_width, 12);
  EXPECT_EQ(back.ner_net.epochs, 2);
}

TEST(RunConfig, LoadResolvesRelativePaths) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "run.json";
  std::ofstream(path) << R"({"rules": "rules.json", "out_dir": "out"})";
  const RunConfig r = load_run_config(path);
  EXPECT_EQ(*r.rules, dir / "rules.json");
  EXPECT_EQ(r.out_dir, dir / "out");
  std::ofstream(path) << "{broken";
  EXPECT_THROW(load_run_config(path), DataError);
}

TEST(DecoderConfig, JsonRoundTrip) {
  DecoderConfig c;
  c.alpha = 1.25;
  c.prune_threshold = -8.0;
  const DecoderConfig back = decoder_config_from_json(decoder_config_to_json(c));
  EXPECT_EQ(back.alpha, 1.25);
  EXPECT_EQ(back.prune_threshold, -8.0);
  EXPECT_THROW(decoder_config_from_json({{"beam", 3}}), DataError);
}

}  // namespace
}  // namespace nerctc
