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

#ifndef NERCTC_TRAINER_H_
#define NERCTC_TRAINER_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerctc/alphabet.h"
#include "nerctc/corpus.h"
#include "nerctc/net.h"

namespace nerctc {

// Output alphabet for a phase: base characters for asr; base, optional
// star and the nine markers for ner.
Alphabet phase_alphabet(std::u32string_view base_chars, Phase phase, bool starred);

// The CTC target text of an utterance: its plain transcript for asr, its
// tagged transcript (star-transformed when starred) for ner.
std::string training_target(const Utterance& u, Phase phase, bool starred);

// Swaps in a new output layer for the extended alphabet. Lower layers are
// copied bit for bit. With keep_base_rows the rows of symbols shared with
// `from` keep their trained weights and only the new rows are initialized;
// otherwise the whole output layer is re-initialized. Throws
// std::invalid_argument when `to` does not extend `from` or the net does
// not match `from`.
Net extend_output_layer(const Net& net, const Alphabet& from, const Alphabet& to,
                        uint64_t seed, bool keep_base_rows = true);

// Per-dimension mean and 1/stddev over all frames of the corpus.
void fit_normalization(Net& net, const std::vector<Utterance>& corpus);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;  // weighted mean per-utterance CTC loss
  long samples = 0;
  long skipped = 0;  // infeasible targets after perturbation
  double learning_rate = 0.0;
  double seconds = 0.0;
  std::optional<double> dev_cer;
  std::optional<double> dev_wer;
  std::optional<double> dev_f;
};

// One "train" record and, when dev metrics exist, one "dev" record.
std::vector<nlohmann::json> epoch_records(const EpochStats& s);

struct TrainOptions {
  Phase phase = Phase::kAsr;
  bool starred = false;
  double augment_weight = 1.0;  // loss weight of augmented utterances
  bool perturb = true;
  int threads = 1;
  int first_epoch = 0;  // epoch index used for seeding and the lr schedule
  // Skip dev metrics on all but every n-th epoch and the last (0 = never).
  int dev_every = 1;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainData {
  const std::vector<Utterance>* train = nullptr;
  const std::vector<Utterance>* augmented = nullptr;  // optional
  const std::vector<Utterance>* dev = nullptr;        // optional
};

// Momentum SGD on CTC loss with clip-by-global-norm, running
// net.config().epochs epochs. Features are re-perturbed every epoch from
// (seed, epoch, utterance). Results do not depend on the thread count.
// Throws std::invalid_argument when the alphabet does not match the net or
// a target uses symbols outside it, and std::runtime_error on a non-finite
// loss.
std::vector<EpochStats> train_net(Net& net, const Alphabet& alphabet, const TrainData& data,
                                  const TrainOptions& opts);

// The lattice of every utterance, computed in parallel.
std::vector<Matrix> forward_all(const Net& net, const std::vector<Utterance>& utts,
                                int threads);

struct DevMetrics {
  double cer = 0.0;
  double wer = 0.0;
  double f = 0.0;  // category F on tagged alphabets
};

// Greedy decoding of every utterance. With base_only, markers and star are
// masked so the rates measure the transcription alone.
DevMetrics evaluate_greedy(const Net& net, const Alphabet& alphabet,
                           const std::vector<Utterance>& utts, bool base_only, int threads);

}  // namespace nerctc

#endif  // NERCTC_TRAINER_H_
