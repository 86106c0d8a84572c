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

#ifndef NERCTC_TESTS_DECODER_ORACLE_H_
#define NERCTC_TESTS_DECODER_ORACLE_H_

// Q-argmax over every label sequence, from path enumeration. The LM is the
// library's, since it is not what these checks are about; everything else
// is recomputed here.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nerctc/alphabet.h"
#include "nerctc/lm.h"
#include "oracles.h"

namespace oracle {

struct Best {
  std::string text;
  double q = -std::numeric_limits<double>::infinity();
};

inline int word_count(const std::vector<std::string>& tokens) {
  int n = 0;
  for (const auto& t : tokens) {
    if (t == "*" || t == "]" || t == "[" || t == "(" || t == "{" || t == "$" || t == "&" ||
        t == "%" || t == "#" || t == ")") {
      continue;
    }
    ++n;
  }
  return n;
}

inline Best q_argmax(const Matrix& logits, const nerctc::NgramLM* lm,
                     const nerctc::Alphabet& alphabet, double alpha, double beta) {
  Best best;
  for (const auto& [labels, p] : label_posteriors(logits)) {
    const std::string text = alphabet.from_ids(labels);
    const auto tokens = nerctc::tokenize(text);
    const double q = std::log(p) + alpha * (lm ? lm->score(tokens) : 0.0) +
                     beta * word_count(tokens);
    if (q > best.q || (q == best.q && text < best.text)) best = {text, q};
  }
  return best;
}

}  // namespace oracle

#endif  // NERCTC_TESTS_DECODER_ORACLE_H_
