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

#ifndef NERCTC_EVAL_H_
#define NERCTC_EVAL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerctc/alphabet.h"

namespace nerctc {

enum class AlignOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  AlignOp op;
  // Index into ref (valid unless kInsert) and hyp (valid unless kDelete).
  int ref = -1;
  int hyp = -1;
};

// Minimum-edit alignment of two entity sequences. Substitution costs 0 when
// categories agree and 1 otherwise; insertion and deletion cost 1. Among
// minimum-cost alignments the one with the most category matches wins, then
// the most exact value matches, then the earliest operations in match,
// substitution, deletion, insertion order. Throws std::invalid_argument when
// either list is unordered or overlapping.
std::vector<AlignedPair> align_entities(const std::vector<Entity>& ref,
                                        const std::vector<Entity>& hyp);

// Lowercase, collapse whitespace.
std::string normalize_value(std::string_view value);

enum class ScoreMode { kCategory, kCatValue };
std::string_view score_mode_name(ScoreMode m);
ScoreMode score_mode_from_name(std::string_view name);  // throws DataError

double precision(long hits, long hyp_total);
double recall(long hits, long ref_total);
double f_measure(double p, double r);

struct Counts {
  long hits = 0;
  long hyp_total = 0;
  long ref_total = 0;

  double p() const { return precision(hits, hyp_total); }
  double r() const { return recall(hits, ref_total); }
  double f() const { return f_measure(p(), r()); }
};

struct EvalReport {
  Counts category;
  Counts catvalue;
  std::map<Category, Counts> per_category;  // category mode
  std::optional<double> wer;
  std::optional<double> cer;

  double value_accuracy() const {
    return category.hits == 0 ? 0.0
                              : static_cast<double>(catvalue.hits) / category.hits;
  }
  const Counts& mode(ScoreMode m) const {
    return m == ScoreMode::kCategory ? category : catvalue;
  }
};

struct ScoredUtterance {
  std::string id;
  std::string tagged;  // parsed with the repair policy
};

// Micro-averaged scores. Throws DataError when the id sets differ.
EvalReport score(const std::vector<ScoredUtterance>& ref,
                 const std::vector<ScoredUtterance>& hyp, bool with_rates = false,
                 int threads = 1);

// Corpus-level Levenshtein rates: total edits over total reference length.
double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
double cer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
// Edit distance between two token sequences.
long edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);
long edit_distance(std::u32string_view a, std::u32string_view b);

nlohmann::json report_to_json(const EvalReport& report, ScoreMode mode);
// Fixed-width "System Corpus P R F" table, one row per entry.
struct TableRow {
  std::string system;
  std::string corpus;
  Counts counts;
};
std::string format_table(const std::vector<TableRow>& rows);

}  // namespace nerctc

#endif  // NERCTC_EVAL_H_
