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

#include "nerctc/workflow.h"

#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/parallel.h"

namespace nerctc {

LmText lm_text_from_name(std::string_view name) {
  if (name == "plain") return LmText::kPlain;
  if (name == "tagged") return LmText::kTagged;
  if (name == "starred") return LmText::kStarred;
  throw DataError("unknown LM text mode '" + std::string(name) + "'");
}

std::vector<std::string> lm_tokens(const Utterance& u, LmText mode) {
  switch (mode) {
    case LmText::kPlain:
      return tokenize(u.plain);
    case LmText::kTagged:
      return TaggedTranscript::from_string(u.tagged).tokens();
    case LmText::kStarred:
      return star_transform(TaggedTranscript::from_string(u.tagged)).tokens();
  }
  throw std::logic_error("unreachable");
}

NgramLM train_lm(const std::vector<Utterance>& utts, LmText mode, int order) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(utts.size());
  for (const auto& u : utts) {
    try {
      sentences.push_back(lm_tokens(u, mode));
    } catch (const DataError& e) {
      throw DataError("utterance '" + u.id + "': " + e.what());
    }
  }
  return NgramLM::train(sentences, order);
}

namespace {

void append_history(Checkpoint& ckpt, const std::vector<EpochStats>& stats, Phase phase) {
  for (const auto& s : stats) {
    for (auto rec : epoch_records(s)) {
      rec["phase"] = phase_name(phase);
      ckpt.metrics.push_back(std::move(rec));
    }
  }
}

}  // namespace

Checkpoint train_asr_phase(const RunConfig& cfg, const std::vector<Utterance>& train,
                           const std::vector<Utterance>& dev, int threads,
                           std::vector<EpochStats>* history) {
  Checkpoint ckpt;
  ckpt.phase = Phase::kAsr;
  ckpt.alphabet = phase_alphabet(cfg.corpus.base_chars, Phase::kAsr, false);
  NetConfig nc = cfg.net_for(Phase::kAsr);
  nc.output_size = ckpt.alphabet.size();
  ckpt.net = Net(nc);
  fit_normalization(ckpt.net, train);
  TrainOptions opts;
  opts.phase = Phase::kAsr;
  opts.threads = threads;
  const std::vector<EpochStats> stats =
      train_net(ckpt.net, ckpt.alphabet, {&train, nullptr, &dev}, opts);
  ckpt.epoch = nc.epochs;
  append_history(ckpt, stats, Phase::kAsr);
  if (history) *history = stats;
  return ckpt;
}

Checkpoint extend_for_ner(const Checkpoint& asr, bool starred, uint64_t seed,
                          bool keep_base_rows) {
  if (asr.phase != Phase::kAsr) throw DataError("phase-2 training must start from an asr checkpoint");
  Checkpoint out = asr;
  out.phase = Phase::kNer;
  out.starred = starred;
  out.alphabet = phase_alphabet(asr.alphabet.base_chars(), Phase::kNer, starred);
  out.net = extend_output_layer(asr.net, asr.alphabet, out.alphabet, seed, keep_base_rows);
  return out;
}

Checkpoint train_ner_phase(const RunConfig& cfg, const Checkpoint& asr, bool starred,
                           const std::vector<Utterance>& train,
                           const std::vector<Utterance>* augmented,
                           const std::vector<Utterance>& dev, int threads,
                           std::vector<EpochStats>* history, bool keep_base_rows) {
  const NetConfig nc = cfg.net_for(Phase::kNer);
  Checkpoint ckpt = extend_for_ner(asr, starred, nc.seed, keep_base_rows);
  ckpt.net.set_optimization(nc);
  TrainOptions opts;
  opts.phase = Phase::kNer;
  opts.starred = starred;
  opts.threads = threads;
  opts.augment_weight = cfg.augment_weight;
  opts.first_epoch = asr.epoch;
  const std::vector<EpochStats> stats =
      train_net(ckpt.net, ckpt.alphabet, {&train, augmented, &dev}, opts);
  ckpt.epoch = asr.epoch + nc.epochs;
  append_history(ckpt, stats, Phase::kNer);
  if (history) *history = stats;
  return ckpt;
}

std::vector<std::vector<Hypothesis>> decode_corpus(const Checkpoint& ckpt,
                                                   const std::vector<Utterance>& utts,
                                                   const NgramLM* lm, const DecoderConfig& cfg,
                                                   int threads) {
  cfg.validate();
  std::vector<std::vector<Hypothesis>> out(utts.size());
  parallel_for(utts.size(), threads, [&](size_t k) {
    out[k] = beam_search(ckpt.net.forward(utts[k].features), lm, ckpt.alphabet, cfg);
  });
  return out;
}

std::vector<std::string> pipeline_decode(const Checkpoint& ckpt,
                                         const std::vector<Utterance>& utts,
                                         const NgramLM* lm, DecoderConfig cfg,
                                         const RuleSet& rules, int threads) {
  cfg.base_only = true;
  cfg.n_best = 1;
  const auto nbest = decode_corpus(ckpt, utts, lm, cfg, threads);
  std::vector<std::string> out(utts.size());
  for (size_t k = 0; k < utts.size(); ++k) {
    const std::string text = nbest[k].empty() ? std::string() : nbest[k][0].text;
    out[k] = annotate(text, rules).str();
  }
  return out;
}

std::vector<ScoredUtterance> scored(const std::vector<Utterance>& utts) {
  std::vector<ScoredUtterance> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.id, u.tagged});
  return out;
}

std::vector<ScoredUtterance> scored(const std::vector<Utterance>& utts,
                                    const std::vector<std::string>& tagged) {
  if (utts.size() != tagged.size()) throw std::invalid_argument("hypothesis count mismatch");
  std::vector<ScoredUtterance> out;
  out.reserve(utts.size());
  for (size_t k = 0; k < utts.size(); ++k) out.push_back({utts[k].id, tagged[k]});
  return out;
}

}  // namespace nerctc
