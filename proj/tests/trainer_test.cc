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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "nerctc/error.h"

namespace nerctc {
namespace {

CorpusSpec toy_spec(int train, int dev = 0) {
  CorpusSpec s = default_corpus_spec();
  s.counts = {{Split::kTrain, train}, {Split::kDev, dev}, {Split::kTest, 0}};
  return s;
}

NetConfig small_net(int output_size) {
  NetConfig c;
  c.conv_channels = 24;
  c.hidden = 24;
  c.rnn_layers = 1;
  c.output_size = output_size;
  c.batch_size = 8;
  c.epochs = 1;
  return c;
}

TEST(TrainingTarget, PhasesAndStars) {
  Utterance u;
  u.plain = "le sculpteur césar est mort";
  u.tagged = "le sculpteur [césar] est mort";
  EXPECT_EQ(training_target(u, Phase::kAsr, false), u.plain);
  EXPECT_EQ(training_target(u, Phase::kNer, false), "le sculpteur [ césar ] est mort");
  EXPECT_EQ(training_target(u, Phase::kNer, true), "* [ césar ] *");
}

TEST(TrainingTarget, StarredTargetsHaveNoOutsideWords) {
  for (const Utterance& u : generate_corpus(toy_spec(300)).utterances) {
    const std::string t = training_target(u, Phase::kNer, true);
    bool inside = false;
    for (const std::string& tok : tokenize(t)) {
      if (tok == "]") {
        inside = false;
      } else if (tok.size() == 1 && category_for_marker(static_cast<char32_t>(tok[0]))) {
        inside = true;
      } else if (tok != "*") {
        EXPECT_TRUE(inside) << t;
      }
    }
  }
}

TEST(PhaseAlphabet, Sizes) {
  const int base = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false).size();
  EXPECT_EQ(phase_alphabet(kFrenchBaseChars, Phase::kNer, false).size(), base + 9);
  EXPECT_EQ(phase_alphabet(kFrenchBaseChars, Phase::kNer, true).size(), base + 10);
}

TEST(Train, SingleUtteranceOverfits) {
  const Alphabet alphabet = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false);
  CorpusSpec spec = toy_spec(1);
  std::vector<Utterance> one = {generate_corpus(spec).utterances[0]};
  one[0].plain = "le chat";
  one[0].features = synthesize_features(U"le chat", spec, 3);
  NetConfig c = small_net(alphabet.size());
  c.conv_stride = 1;
  c.batch_size = 1;
  c.epochs = 500;
  c.learning_rate = 0.01;
  Net net(c);
  fit_normalization(net, one);
  TrainOptions opts;
  opts.perturb = false;
  opts.dev_every = 0;
  TrainData data;
  data.train = &one;
  train_net(net, alphabet, data, opts);
  const double final_loss = ctc_loss(net.forward(one[0].features), alphabet.to_ids("le chat")).loss;
  // One utterance per batch and epoch: 500 epochs are 500 steps.
  EXPECT_LT(final_loss, 0.01);
}

// Losses of epochs 0..3 give three transitions after the first epoch.
TEST(Train, LossMostlyDecreasesOverThreeEpochs) {
  const GeneratedCorpus g = generate_corpus(toy_spec(200));
  const Alphabet alphabet = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false);
  NetConfig c = small_net(alphabet.size());
  c.epochs = 4;
  Net net(c);
  fit_normalization(net, g.utterances);
  TrainOptions opts;
  opts.dev_every = 0;
  TrainData data;
  data.train = &g.utterances;
  const auto stats = train_net(net, alphabet, data, opts);
  ASSERT_EQ(stats.size(), 4u);
  int decreases = 0;
  for (size_t k = 1; k < stats.size(); ++k) decreases += stats[k].loss <= stats[k - 1].loss;
  EXPECT_GE(decreases, 2);
  EXPECT_EQ(stats[0].samples, 200);
}

TEST(Train, ResultsIndependentOfThreadCount) {
  const GeneratedCorpus g = generate_corpus(toy_spec(24, 4));
  const auto train = select_split(g.utterances, Split::kTrain);
  const auto dev = select_split(g.utterances, Split::kDev);
  const Alphabet alphabet = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false);
  NetConfig c = small_net(alphabet.size());
  c.epochs = 2;
  auto run = [&](int threads) {
    Net net(c);
    fit_normalization(net, train);
    TrainOptions opts;
    opts.threads = threads;
    TrainData data;
    data.train = &train;
    data.dev = &dev;
    const auto stats = train_net(net, alphabet, data, opts);
    return std::make_pair(net, stats);
  };
  const auto [a, sa] = run(1);
  const auto [b, sb] = run(3);
  for (size_t k = 0; k < a.params().size(); ++k) EXPECT_EQ(a.params()[k], b.params()[k]);
  for (size_t e = 0; e < sa.size(); ++e) {
    EXPECT_EQ(sa[e].loss, sb[e].loss);
    EXPECT_EQ(sa[e].dev_cer, sb[e].dev_cer);
  }
}

TEST(Train, RejectsAlphabetMismatch) {
  const GeneratedCorpus g = generate_corpus(toy_spec(4));
  const Alphabet base = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false);
  const Alphabet tagged = phase_alphabet(kFrenchBaseChars, Phase::kNer, false);
  TrainData data;
  data.train = &g.utterances;
  TrainOptions opts;
  Net net(small_net(base.size()));
  EXPECT_THROW(train_net(net, tagged, data, opts), std::invalid_argument);
  opts.phase = Phase::kNer;
  EXPECT_THROW(train_net(net, base, data, opts), std::invalid_argument);

  const Alphabet tiny = phase_alphabet(U" ab", Phase::kAsr, false);
  Net small(small_net(tiny.size()));
  opts.phase = Phase::kAsr;
  EXPECT_THROW(train_net(small, tiny, data, opts), std::invalid_argument);
}

TEST(Train, NonFiniteLossAborts) {
  GeneratedCorpus g = generate_corpus(toy_spec(4));
  g.utterances[2].features(0, 0) = std::numeric_limits<float>::quiet_NaN();
  const Alphabet alphabet = phase_alphabet(kFrenchBaseChars, Phase::kAsr, false);
  Net net(small_net(alphabet.size()));
  TrainData data;
  data.train = &g.utterances;
  TrainOptions opts;
  opts.perturb = false;
  try {
    train_net(net, alphabet, data, opts);
    FAIL() << "expected an abort";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(g.utterances[2].id), std::string::npos) << e.what();
  }
}

TEST(Normalization, StandardizesFrames) {
  const GeneratedCorpus g = generate_corpus(toy_spec(20));
  Net net(small_net(5));
  fit_normalization(net, g.utterances);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(16), sq = Eigen::VectorXd::Zero(16);
  long n = 0;
  for (const auto& u : g.utterances) {
    for (int t = 0; t < u.features.rows(); ++t) {
      const Eigen::VectorXd z =
          (u.features.row(t).cast<double>().transpose() - net.norm_mean()).cwiseProduct(
              net.norm_inv_std());
      sum += z;
      sq += z.cwiseProduct(z);
      ++n;
    }
  }
  for (int d = 0; d < 16; ++d) {
    EXPECT_NEAR(sum(d) / n, 0.0, 1e-9);
    EXPECT_NEAR(sq(d) / n, 1.0, 1e-6);
  }
}

TEST(EpochRecords, TrainAndDev) {
  EpochStats s;
  s.epoch = 2;
  s.loss = 1.5;
  EXPECT_EQ(epoch_records(s).size(), 1u);
  s.dev_cer = 0.1;
  const auto r = epoch_records(s);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0]["split"], "train");
  EXPECT_EQ(r[1]["split"], "dev");
  EXPECT_EQ(r[1]["epoch"], 2);
}

}  // namespace
}  // namespace nerctc
