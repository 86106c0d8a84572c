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

#include "nerctc/trainer.h"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "nerctc/ctc.h"
#include "nerctc/decoder.h"
#include "nerctc/eval.h"
#include "nerctc/parallel.h"

namespace nerctc {

namespace {

constexpr uint64_t kShuffleStream = 0x73687566;  // "shuf"
constexpr uint64_t kPerturbStream = 0x70657274;  // "pert"

std::string rate_text(const std::string& tagged) {
  std::vector<std::string> words;
  for (auto& w : tokenize(strip_markers(tagged))) {
    if (w != "*") words.push_back(std::move(w));
  }
  return join(words);
}

struct Sample {
  const Utterance* utt;
  std::vector<int> target;
  double weight;
};

}  // namespace

Alphabet phase_alphabet(std::u32string_view base_chars, Phase phase, bool starred) {
  if (phase == Phase::kAsr) return Alphabet::build(base_chars, false, false);
  return Alphabet::build(base_chars, starred, true);
}

std::string training_target(const Utterance& u, Phase phase, bool starred) {
  if (phase == Phase::kAsr) return u.plain;
  if (starred) return star_transform(u.tagged);
  return TaggedTranscript::from_string(u.tagged).str();
}

Net extend_output_layer(const Net& net, const Alphabet& from, const Alphabet& to,
                        uint64_t seed, bool keep_base_rows) {
  if (net.output_size() != from.size()) {
    throw std::invalid_argument("net output size " + std::to_string(net.output_size()) +
                                " does not match the alphabet size " +
                                std::to_string(from.size()));
  }
  if (!to.extends(from)) {
    throw std::invalid_argument("new alphabet does not extend the base symbols");
  }
  return net.extended(to.size(), seed, keep_base_rows);
}

void fit_normalization(Net& net, const std::vector<Utterance>& corpus) {
  const int F = net.config().feature_dim;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(F), sq = Eigen::VectorXd::Zero(F);
  double n = 0.0;
  for (const auto& u : corpus) {
    if (u.features.cols() != F) {
      throw std::invalid_argument("utterance '" + u.id + "' has feature dimension " +
                                  std::to_string(u.features.cols()));
    }
    const Eigen::MatrixXd x = u.features.cast<double>();
    sum += x.colwise().sum().transpose();
    sq += x.array().square().colwise().sum().matrix().transpose();
    n += static_cast<double>(x.rows());
  }
  if (n == 0.0) throw std::invalid_argument("cannot normalize on an empty corpus");
  const Eigen::VectorXd mean = sum / n;
  Eigen::VectorXd inv_std(F);
  for (int i = 0; i < F; ++i) {
    const double var = std::max(sq(i) / n - mean(i) * mean(i), 1e-8);
    inv_std(i) = 1.0 / std::sqrt(var);
  }
  net.set_normalization(mean, inv_std);
}

std::vector<nlohmann::json> epoch_records(const EpochStats& s) {
  std::vector<nlohmann::json> out;
  out.push_back({{"epoch", s.epoch},
                 {"split", "train"},
                 {"loss", s.loss},
                 {"samples", s.samples},
                 {"skipped", s.skipped},
                 {"lr", s.learning_rate},
                 {"seconds", s.seconds}});
  if (s.dev_cer || s.dev_f) {
    nlohmann::json dev = {{"epoch", s.epoch}, {"split", "dev"}};
    if (s.dev_cer) dev["cer"] = *s.dev_cer;
    if (s.dev_wer) dev["wer"] = *s.dev_wer;
    if (s.dev_f) dev["f"] = *s.dev_f;
    out.push_back(std::move(dev));
  }
  return out;
}

std::vector<Matrix> forward_all(const Net& net, const std::vector<Utterance>& utts,
                                int threads) {
  std::vector<Matrix> out(utts.size());
  parallel_for(utts.size(), threads, [&](size_t k) { out[k] = net.forward(utts[k].features); });
  return out;
}

DevMetrics evaluate_greedy(const Net& net, const Alphabet& alphabet,
                           const std::vector<Utterance>& utts, bool base_only, int threads) {
  if (net.output_size() != alphabet.size()) {
    throw std::invalid_argument("net output size does not match the alphabet");
  }
  const std::vector<bool> mask = base_only ? base_symbol_mask(alphabet) : std::vector<bool>{};
  std::vector<std::string> hyps(utts.size());
  parallel_for(utts.size(), threads, [&](size_t k) {
    hyps[k] = alphabet.from_ids(greedy_decode(net.forward(utts[k].features), Alphabet::kBlank, mask));
  });
  DevMetrics m;
  std::vector<std::string> ref_text, hyp_text;
  std::vector<ScoredUtterance> ref, hyp;
  for (size_t k = 0; k < utts.size(); ++k) {
    ref_text.push_back(utts[k].plain);
    hyp_text.push_back(rate_text(hyps[k]));
    ref.push_back({utts[k].id, utts[k].tagged});
    hyp.push_back({utts[k].id, hyps[k]});
  }
  m.cer = cer(ref_text, hyp_text);
  m.wer = wer(ref_text, hyp_text);
  if (alphabet.tag_set_enabled()) m.f = score(ref, hyp).category.f();
  return m;
}

std::vector<EpochStats> train_net(Net& net, const Alphabet& alphabet, const TrainData& data,
                                  const TrainOptions& opts) {
  const NetConfig& cfg = net.config();
  if (net.output_size() != alphabet.size()) {
    throw std::invalid_argument("net output size " + std::to_string(net.output_size()) +
                                " does not match the alphabet size " +
                                std::to_string(alphabet.size()));
  }
  if (opts.phase == Phase::kNer && !alphabet.tag_set_enabled()) {
    throw std::invalid_argument("ner phase needs a tagged alphabet");
  }
  if (opts.phase == Phase::kAsr && (alphabet.tag_set_enabled() || alphabet.star_enabled())) {
    throw std::invalid_argument("asr phase needs a base alphabet");
  }
  if (opts.starred && !alphabet.star_enabled()) {
    throw std::invalid_argument("starred training needs an alphabet with the star");
  }
  if (!data.train) throw std::invalid_argument("no training corpus");
  if (!(opts.augment_weight >= 0.0)) throw std::invalid_argument("augment_weight must be >= 0");

  std::vector<Sample> samples;
  auto add = [&](const std::vector<Utterance>& utts, double weight) {
    for (const auto& u : utts) {
      if (u.features.rows() == 0) {
        throw std::invalid_argument("utterance '" + u.id + "' has no features loaded");
      }
      std::vector<int> target;
      try {
        target = alphabet.to_ids(training_target(u, opts.phase, opts.starred));
      } catch (const std::exception& e) {
        throw std::invalid_argument("utterance '" + u.id + "': " + e.what());
      }
      samples.push_back({&u, std::move(target), weight});
    }
  };
  add(*data.train, 1.0);
  if (data.augmented && opts.augment_weight > 0.0) add(*data.augmented, opts.augment_weight);
  if (samples.empty()) throw std::invalid_argument("empty training corpus");

  std::vector<Matrix> velocity;
  for (const auto& p : net.params()) velocity.push_back(Matrix::Zero(p.rows(), p.cols()));

  std::vector<EpochStats> history;
  const int batch = cfg.batch_size;
  std::vector<Net::Gradients> per_sample(batch);
  std::vector<double> sample_loss(batch);
  std::vector<char> sample_ok(batch);
  const Range no_gain{0.0, 0.0}, no_tempo{1.0, 1.0};

  for (int e = 0; e < cfg.epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    const int epoch = opts.first_epoch + e;
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(cfg.seed ^ kShuffleStream, static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const uint64_t epoch_seed = derive_seed(cfg.seed ^ kPerturbStream, static_cast<uint64_t>(epoch));

    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = lr;
    double loss_sum = 0.0, weight_sum = 0.0;
    for (size_t b0 = 0; b0 < order.size(); b0 += batch) {
      const size_t n = std::min<size_t>(batch, order.size() - b0);
      parallel_for(n, opts.threads, [&](size_t i) {
        const size_t idx = order[b0 + i];
        const Sample& s = samples[idx];
        const FeatureMatrix feats =
            opts.perturb ? perturb(s.utt->features, cfg.gain_range, cfg.tempo_range,
                                   derive_seed(epoch_seed, idx))
                         : perturb(s.utt->features, no_gain, no_tempo, 0);
        sample_ok[i] = 0;
        if (net.output_length(static_cast<int>(feats.rows())) < ctc_min_frames(s.target)) return;
        Net::Tape tape;
        const Matrix logits = net.forward(feats, &tape);
        if (!logits.allFinite()) {
          sample_loss[i] = std::numeric_limits<double>::quiet_NaN();
          sample_ok[i] = 2;
          return;
        }
        CtcResult r = ctc_loss(logits, s.target, Alphabet::kBlank);
        if (!r.feasible()) return;
        sample_loss[i] = r.loss;
        if (!std::isfinite(r.loss) || !r.grad.allFinite()) {
          sample_ok[i] = 2;
          return;
        }
        if (per_sample[i].size() != net.params().size()) {
          per_sample[i] = net.zero_gradients();
        } else {
          for (auto& g : per_sample[i]) g.setZero();
        }
        r.grad *= s.weight;
        net.backward(tape, r.grad, per_sample[i]);
        sample_ok[i] = 1;
      });

      double batch_weight = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const Sample& s = samples[order[b0 + i]];
        if (sample_ok[i] == 2) {
          std::ostringstream msg;
          msg << "non-finite loss on utterance '" << s.utt->id << "' at epoch " << epoch
              << ", batch " << b0 / batch << " (loss " << sample_loss[i] << ", target length "
              << s.target.size() << ")";
          throw std::runtime_error(msg.str());
        }
        if (sample_ok[i] == 0) {
          ++stats.skipped;
          continue;
        }
        ++stats.samples;
        batch_weight += s.weight;
        loss_sum += s.weight * sample_loss[i];
        weight_sum += s.weight;
      }
      if (batch_weight == 0.0) continue;

      // Sum in sample order so the result is independent of scheduling.
      Net::Gradients grad = net.zero_gradients();
      for (size_t i = 0; i < n; ++i) {
        if (sample_ok[i] != 1) continue;
        for (size_t p = 0; p < grad.size(); ++p) grad[p] += per_sample[i][p];
      }
      double norm2 = 0.0;
      for (auto& g : grad) {
        g /= batch_weight;
        norm2 += g.squaredNorm();
      }
      const double norm = std::sqrt(norm2);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      auto& params = net.params();
      for (size_t p = 0; p < params.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] - (lr * scale) * grad[p];
        params[p] += velocity[p];
      }
    }
    stats.loss = weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;

    const bool last = e + 1 == cfg.epochs;
    if (data.dev && !data.dev->empty() && opts.dev_every > 0 &&
        (last || (e + 1) % opts.dev_every == 0)) {
      const DevMetrics m = evaluate_greedy(net, alphabet, *data.dev, false, opts.threads);
      if (opts.phase == Phase::kAsr) {
        stats.dev_cer = m.cer;
        stats.dev_wer = m.wer;
      } else {
        stats.dev_f = m.f;
      }
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (auto log = spdlog::get("nerctc")) {
      log->info("epoch {} loss {:.4f} skipped {} lr {:.4g} {:.1f}s{}{}", epoch, stats.loss,
                stats.skipped, lr, stats.seconds,
                stats.dev_cer ? fmt::format(" dev cer {:.4f}", *stats.dev_cer) : "",
                stats.dev_f ? fmt::format(" dev f {:.4f}", *stats.dev_f) : "");
    }
    if (opts.on_epoch) opts.on_epoch(stats);
    history.push_back(stats);
  }
  return history;
}

}  // namespace nerctc
