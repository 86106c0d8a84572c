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

#ifndef NERCTC_WORKFLOW_H_
#define NERCTC_WORKFLOW_H_

#include <string>
#include <vector>

#include "nerctc/augment.h"
#include "nerctc/config.h"
#include "nerctc/corpus.h"
#include "nerctc/decoder.h"
#include "nerctc/eval.h"
#include "nerctc/lm.h"
#include "nerctc/net.h"
#include "nerctc/trainer.h"

namespace nerctc {

// End-to-end steps shared by the command-line tool and the experiment
// harness.

enum class LmText { kPlain, kTagged, kStarred };
LmText lm_text_from_name(std::string_view name);  // throws DataError

std::vector<std::string> lm_tokens(const Utterance& u, LmText mode);
NgramLM train_lm(const std::vector<Utterance>& utts, LmText mode, int order);

// Phase 1: fits feature normalization on `train` and trains a base-alphabet
// net from scratch.
Checkpoint train_asr_phase(const RunConfig& cfg, const std::vector<Utterance>& train,
                           const std::vector<Utterance>& dev, int threads,
                           std::vector<EpochStats>* history = nullptr);

// The phase-2 starting point: the asr net with its output layer extended to
// the tagged (optionally starred) alphabet.
Checkpoint extend_for_ner(const Checkpoint& asr, bool starred, uint64_t seed,
                          bool keep_base_rows = true);

// Phase 2 on top of extend_for_ner(asr, ...).
Checkpoint train_ner_phase(const RunConfig& cfg, const Checkpoint& asr, bool starred,
                           const std::vector<Utterance>& train,
                           const std::vector<Utterance>* augmented,
                           const std::vector<Utterance>& dev, int threads,
                           std::vector<EpochStats>* history = nullptr,
                           bool keep_base_rows = true);

// Beam-search decoding of every utterance.
std::vector<std::vector<Hypothesis>> decode_corpus(const Checkpoint& ckpt,
                                                   const std::vector<Utterance>& utts,
                                                   const NgramLM* lm, const DecoderConfig& cfg,
                                                   int threads);

// ASR decoding with markers masked, then rule-based tagging of the text.
std::vector<std::string> pipeline_decode(const Checkpoint& ckpt,
                                         const std::vector<Utterance>& utts,
                                         const NgramLM* lm, DecoderConfig cfg,
                                         const RuleSet& rules, int threads);

std::vector<ScoredUtterance> scored(const std::vector<Utterance>& utts);
std::vector<ScoredUtterance> scored(const std::vector<Utterance>& utts,
                                    const std::vector<std::string>& tagged);

}  // namespace nerctc

#endif  // NERCTC_WORKFLOW_H_
