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

#ifndef NERCTC_DECODER_H_
#define NERCTC_DECODER_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerctc/alphabet.h"
#include "nerctc/ctc.h"
#include "nerctc/lm.h"

namespace nerctc {

struct DecoderConfig {
  double alpha = 0.8;  // LM weight
  double beta = 1.0;   // word bonus
  int beam_width = 64;
  int n_best = 1;
  // Symbols whose per-frame log-probability falls below this are not
  // expanded at that frame.
  std::optional<double> prune_threshold;
  // Restrict decoding to the blank and the base characters (markers and
  // star masked out, remaining mass renormalized).
  bool base_only = false;

  void validate() const;  // throws std::invalid_argument
};

// One scored transcription. Q = ctc_logp + alpha * lm_logp + beta * wc.
struct Hypothesis {
  std::vector<int> labels;
  std::string text;
  double q = kNegInf;
  double ctc_logp = kNegInf;
  double lm_logp = 0.0;
  int wc = 0;
};

// Word count: tokens that are neither markers nor the star.
int word_count(std::span<const std::string> tokens);

// Q for a given transcription, with p_CTC from the exact forward pass.
// `lm` may be null (no LM term). Returns q = -inf for infeasible strings.
Hypothesis score_q(const std::string& text, const Matrix& logits,
                   const NgramLM* lm, const Alphabet& alphabet,
                   const DecoderConfig& cfg);

// CTC prefix beam search with shallow fusion. Each prefix carries
// separate blank/non-blank masses; the LM and word bonus are applied as
// tokens complete (at a space, at a marker or star, and at the end). The
// surviving prefixes are rescored with their exact CTC marginal and
// returned best-first; ties go to the lexicographically smaller string.
std::vector<Hypothesis> beam_search(const Matrix& logits, const NgramLM* lm,
                                    const Alphabet& alphabet, const DecoderConfig& cfg);

// Test oracle: enumerates all |A|^T paths (at most 1e6), aggregates
// collapse classes, and returns the Q-argmax.
Hypothesis exhaustive_oracle(const Matrix& logits, const NgramLM* lm,
                             const Alphabet& alphabet, double alpha, double beta);

// {"id": ..., "nbest": [{"tagged", "Q", "ctc_logp", "lm_logp", "wc"}, ...]}
nlohmann::json decode_record(const std::string& id, const std::vector<Hypothesis>& nbest);

// Allowed-symbol mask for DecoderConfig::base_only.
std::vector<bool> base_symbol_mask(const Alphabet& alphabet);

}  // namespace nerctc

#endif  // NERCTC_DECODER_H_
