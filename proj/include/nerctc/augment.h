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

#ifndef NERCTC_AUGMENT_H_
#define NERCTC_AUGMENT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerctc/alphabet.h"
#include "nerctc/corpus.h"

namespace nerctc {

// Gazetteer and pattern rules for tagging plain transcripts.
//
// Patterns:
//   amount: one or more number words followed by a unit ("soixante dix sept ans")
//   time:   zero or more number words followed by a time word ("douze mars")
struct RuleSet {
  std::map<Category, std::vector<std::string>> gazetteers;
  std::vector<std::string> number_words;  // single tokens
  std::vector<std::string> amount_units;  // may span several tokens
  std::vector<std::string> time_words;    // single tokens
  // Tie-break order for equal-length matches at the same start; categories
  // not listed rank after listed ones, in canonical order.
  std::vector<Category> priority;

  // Throws DataError naming the offending entry: empty or non-lowercase
  // phrases, marker characters, multi-token number or time words.
  void validate() const;
};

RuleSet rule_set_from_json(const nlohmann::json& doc);
nlohmann::json rule_set_to_json(const RuleSet& rules);
RuleSet load_rule_set(const std::filesystem::path& path);

// Gazetteers covering about three quarters of each default corpus list plus
// French number, unit and calendar words. Deliberately incomplete, like a
// real text tagger.
RuleSet default_rule_set();

// Candidate match [begin, end) over tokens.
struct RuleMatch {
  Category category;
  size_t begin;
  size_t end;
};

// Every gazetteer and pattern match in `words`, unresolved.
std::vector<RuleMatch> find_matches(const std::vector<std::string>& words,
                                    const RuleSet& rules);

// Tags a plain transcript. Candidates strictly inside another candidate are
// discarded first; the rest are taken greedily by length (longer first),
// then start (earlier first), then category priority, skipping overlaps.
// Throws std::invalid_argument if the input contains a marker or star.
TaggedTranscript annotate(std::string_view plain, const RuleSet& rules);

// Re-emits every utterance with annotate(plain) as its tagged transcript and
// source "augmented". Throws DataError naming the utterance when a record is
// already augmented or its transcript holds markers.
std::vector<Utterance> augment_corpus(const std::vector<Utterance>& corpus,
                                      const RuleSet& rules, int threads = 1);

// Concatenates manifests, keeping source flags. Throws DataError on
// duplicate ids.
std::vector<Utterance> mix_manifests(const std::vector<Utterance>& gold,
                                     const std::vector<Utterance>& augmented);

}  // namespace nerctc

#endif  // NERCTC_AUGMENT_H_
