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

#include "nerctc/augment.h"

#include <random>

#include <gtest/gtest.h>

#include "nerctc/error.h"

namespace nerctc {
namespace {

RuleSet loc_rules(std::vector<std::string> places) {
  RuleSet r;
  r.gazetteers[Category::kLoc] = std::move(places);
  return r;
}

TEST(Annotate, SingleGazetteerHit) {
  EXPECT_EQ(annotate("il habite à paris", loc_rules({"paris"})).str(), "il habite à $ paris ]");
}

TEST(Annotate, AmountPattern) {
  EXPECT_EQ(annotate("soixante dix sept ans", default_rule_set()).str(),
            "% soixante dix sept ans ]");
}

TEST(Annotate, TimePattern) {
  EXPECT_EQ(annotate("il part le vingt mars", default_rule_set()).str(),
            "il part le # vingt mars ]");
  EXPECT_EQ(annotate("lundi", default_rule_set()).str(), "# lundi ]");
}

TEST(Annotate, LongestMatchWins) {
  EXPECT_EQ(annotate("new york", loc_rules({"new york", "york"})).str(), "$ new york ]");
}

TEST(Annotate, LongerOverlapBeatsEarlierStart) {
  RuleSet r;
  r.gazetteers[Category::kOrg] = {"a b"};
  r.gazetteers[Category::kLoc] = {"b c d"};
  EXPECT_EQ(annotate("a b c d", r).str(), "a $ b c d ]");
}

TEST(Annotate, PriorityBreaksExactTies) {
  RuleSet r;
  r.gazetteers[Category::kOrg] = {"orange"};
  r.gazetteers[Category::kProd] = {"orange"};
  EXPECT_EQ(annotate("orange", r).str(), "{ orange ]");
  r.priority = {Category::kProd};
  EXPECT_EQ(annotate("orange", r).str(), "& orange ]");
}

TEST(Annotate, RejectsMarkers) {
  EXPECT_THROW(annotate("à $ paris ]", loc_rules({"paris"})), std::invalid_argument);
  EXPECT_THROW(annotate("* paris", loc_rules({"paris"})), std::invalid_argument);
}

TEST(Annotate, InvariantsOnGeneratedSentences) {
  CorpusSpec spec = default_corpus_spec();
  spec.counts = {{Split::kTrain, 400}, {Split::kDev, 0}, {Split::kTest, 0}};
  spec.seed = 9;
  const RuleSet rules = default_rule_set();
  int tagged_some = 0;
  for (const Utterance& u : generate_corpus(spec).utterances) {
    const TaggedTranscript t = annotate(u.plain, rules);
    const ParsedTranscript p = parse(t.str(), ParsePolicy::kStrict);
    EXPECT_EQ(strip_markers(t.str()), u.plain);
    tagged_some += !p.entities.empty();
    const auto matches = find_matches(p.words, rules);
    for (const Entity& e : p.entities) {
      for (const RuleMatch& m : matches) {
        const bool strict_inside = m.begin <= e.begin && e.end <= m.end &&
                                   (m.end - m.begin) > (e.end - e.begin);
        EXPECT_FALSE(strict_inside) << u.plain;
      }
    }
  }
  EXPECT_GT(tagged_some, 200);
}

TEST(AugmentCorpus, NoHitsKeepsPlainText) {
  std::vector<Utterance> corpus(3);
  for (int k = 0; k < 3; ++k) corpus[k].id = "u" + std::to_string(k);
  corpus[0].plain = "rien à signaler";
  corpus[1].plain = "le chat dort";
  corpus[2].plain = "il pleut";
  for (const Utterance& u : augment_corpus(corpus, loc_rules({"paris"}), 2)) {
    EXPECT_EQ(u.tagged, u.plain);
    EXPECT_EQ(u.source, "augmented");
  }
}

TEST(AugmentCorpus, RejectsAlreadyAugmented) {
  std::vector<Utterance> corpus(1);
  corpus[0].id = "x";
  corpus[0].plain = "à paris";
  const auto once = augment_corpus(corpus, loc_rules({"paris"}));
  EXPECT_EQ(once[0].tagged, "à $ paris ]");
  EXPECT_THROW(augment_corpus(once, loc_rules({"paris"})), DataError);
  std::vector<Utterance> marked = corpus;
  marked[0].plain = "à $ paris ]";
  EXPECT_THROW(augment_corpus(marked, loc_rules({"paris"})), DataError);
}

TEST(AugmentCorpus, MixKeepsSourceFlags) {
  std::vector<Utterance> gold(2), aug(1);
  gold[0].id = "g0";
  gold[1].id = "g1";
  aug[0].id = "a0";
  aug[0].source = "augmented";
  const auto mixed = mix_manifests(gold, aug);
  ASSERT_EQ(mixed.size(), 3u);
  EXPECT_EQ(mixed[0].source, "gold");
  EXPECT_EQ(mixed[2].source, "augmented");
  aug[0].id = "g1";
  EXPECT_THROW(mix_manifests(gold, aug), DataError);
}

TEST(RuleSet, JsonRoundTripAndValidation) {
  const RuleSet r = default_rule_set();
  EXPECT_NO_THROW(r.validate());
  const RuleSet back = rule_set_from_json(rule_set_to_json(r));
  EXPECT_EQ(rule_set_to_json(back), rule_set_to_json(r));
  RuleSet bad = loc_rules({"Paris"});
  EXPECT_THROW(bad.validate(), DataError);
  bad = loc_rules({""});
  EXPECT_THROW(bad.validate(), DataError);
  bad = loc_rules({"$ x"});
  EXPECT_THROW(bad.validate(), DataError);
  EXPECT_THROW(rule_set_from_json({{"gazetteers", {{"city", {"x"}}}}}), DataError);
}

TEST(RuleSet, DefaultGazetteersAreIncomplete) {
  const RuleSet rules = default_rule_set();
  const CorpusSpec spec = default_corpus_spec();
  const auto& full = spec.gazetteers.at(Category::kLoc);
  const auto& partial = rules.gazetteers.at(Category::kLoc);
  EXPECT_LT(partial.size(), full.size());
  EXPECT_GT(partial.size(), full.size() / 2);
}

}  // namespace
}  // namespace nerctc
