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

#include "nerctc/net.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "nerctc/error.h"
#include "nerctc/trainer.h"
#include "oracles.h"

namespace nerctc {
namespace {

namespace fs = std::filesystem;

NetConfig tiny_config() {
  NetConfig c;
  c.feature_dim = 3;
  c.conv_layers = 2;
  c.conv_channels = 4;
  c.conv_kernel = 3;
  c.conv_stride = 2;
  c.rnn_layers = 2;
  c.hidden = 3;
  c.output_size = 5;
  c.seed = 4;
  return c;
}

FeatureMatrix random_features(std::mt19937_64& rng, int T, int F) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMatrix m(T, F);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

fs::path temp_path(const std::string& name) {
  return fs::path(::testing::TempDir()) / ("net_test_" + name);
}

TEST(Net, InitializationIsDeterministic) {
  const Net a(tiny_config()), b(tiny_config());
  ASSERT_EQ(a.params().size(), b.params().size());
  for (size_t k = 0; k < a.params().size(); ++k) EXPECT_EQ(a.params()[k], b.params()[k]);
  NetConfig other = tiny_config();
  other.seed = 5;
  EXPECT_NE(Net(other).params()[0], a.params()[0]);
}

TEST(Net, ForwardShapesAndDeterminism) {
  NetConfig c = tiny_config();
  c.conv_layers = 1;
  const Net net(c);
  std::mt19937_64 rng(1);
  const FeatureMatrix x = random_features(rng, 10, 3);
  const Matrix y = net.forward(x);
  EXPECT_EQ(y.rows(), 5);  // ceil(10 / 2)
  EXPECT_EQ(y.cols(), 5);
  EXPECT_TRUE(y.allFinite());
  EXPECT_EQ(net.forward(x), y);
  EXPECT_EQ(net.forward(random_features(rng, 11, 3)).rows(), 6);
}

TEST(Net, StrideOneDoublingDoublesLattice) {
  NetConfig c = tiny_config();
  c.conv_stride = 1;
  const Net net(c);
  std::mt19937_64 rng(2);
  EXPECT_EQ(net.forward(random_features(rng, 7, 3)).rows(), 7);
  EXPECT_EQ(net.forward(random_features(rng, 14, 3)).rows(), 14);
  EXPECT_EQ(net.output_length(14), 14);
}

TEST(Net, RejectsBadInput) {
  const Net net(tiny_config());
  EXPECT_THROW(net.forward(FeatureMatrix::Zero(4, 2)), std::invalid_argument);
  EXPECT_THROW(net.forward(FeatureMatrix::Zero(0, 3)), std::invalid_argument);
  NetConfig bad = tiny_config();
  bad.hidden = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

// Every parameter of every layer type against central differences of a
// CTC loss on the net's output.
TEST(Net, GradientMatchesFiniteDifferences) {
  NetConfig c = tiny_config();
  Net net(c);
  std::mt19937_64 rng(3);
  Eigen::VectorXd mean(3), inv_std(3);
  mean << 0.1, -0.2, 0.05;
  inv_std << 1.5, 0.8, 1.1;
  net.set_normalization(mean, inv_std);
  const FeatureMatrix x = random_features(rng, 6, 3);
  const std::vector<int> target = {1, 3};

  auto loss = [&] { return ctc_loss(net.forward(x), target).loss; };
  Net::Tape tape;
  const CtcResult r = ctc_loss(net.forward(x, &tape), target);
  ASSERT_TRUE(r.feasible());
  Net::Gradients grads = net.zero_gradients();
  net.backward(tape, r.grad, grads);

  std::vector<bool> touched(net.params().size(), false);
  for (size_t k = 0; k < net.params().size(); ++k) {
    Matrix& p = net.params()[k];
    for (int i = 0; i < p.size(); ++i) {
      const double numeric = oracle::central_difference(loss, p.data()[i], 1e-6);
      const double err = oracle::relative_error(grads[k].data()[i], numeric);
      EXPECT_LT(err, 1e-4) << net.param_names()[k] << "[" << i << "]";
      touched[k] = touched[k] || grads[k].data()[i] != 0.0;
    }
  }
  for (size_t k = 0; k < touched.size(); ++k) EXPECT_TRUE(touched[k]) << net.param_names()[k];
}

TEST(Net, BackwardAccumulates) {
  const Net net(tiny_config());
  std::mt19937_64 rng(8);
  const FeatureMatrix x = random_features(rng, 6, 3);
  Net::Tape tape;
  const Matrix y = net.forward(x, &tape);
  const Matrix d = oracle::random_logits(rng, y.rows(), y.cols());
  Net::Gradients once = net.zero_gradients(), twice = net.zero_gradients();
  net.backward(tape, d, once);
  net.backward(tape, d, twice);
  net.backward(tape, d, twice);
  for (size_t k = 0; k < once.size(); ++k) {
    EXPECT_LT((twice[k] - 2.0 * once[k]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Extension, CopiesLowerLayersAndGrowsOutput) {
  const Alphabet base = phase_alphabet(U" ab", Phase::kAsr, false);
  const Alphabet starred = phase_alphabet(U" ab", Phase::kNer, true);
  NetConfig c = tiny_config();
  c.output_size = base.size();
  const Net net(c);
  for (bool keep : {true, false}) {
    const Net ext = extend_output_layer(net, base, starred, 77, keep);
    EXPECT_EQ(ext.output_size(), base.size() + 10);
    for (size_t k = 0; k < net.output_param_begin(); ++k) {
      EXPECT_EQ(ext.params()[k], net.params()[k]) << net.param_names()[k];
    }
    const Matrix& w_old = net.params()[net.output_param_begin()];
    const Matrix& w_new = ext.params()[ext.output_param_begin()];
    EXPECT_EQ(w_new.rows(), starred.size());
    EXPECT_EQ(w_new.topRows(base.size()) == w_old, keep);
    std::mt19937_64 rng(4);
    EXPECT_TRUE(ext.forward(random_features(rng, 9, 3)).allFinite());
  }
  EXPECT_THROW(extend_output_layer(net, starred, base, 1), std::invalid_argument);
  const Alphabet other = phase_alphabet(U" ba", Phase::kNer, true);
  EXPECT_THROW(extend_output_layer(net, base, other, 1), std::invalid_argument);
}

TEST(Checkpoint, RoundTripReproducesForward) {
  Checkpoint ck;
  ck.alphabet = phase_alphabet(U" ab", Phase::kNer, false);
  NetConfig c = tiny_config();
  c.output_size = ck.alphabet.size();
  ck.net = Net(c);
  ck.phase = Phase::kNer;
  ck.epoch = 3;
  ck.metrics = nlohmann::json::array({{{"epoch", 0}, {"loss", 1.5}}});
  const fs::path path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.alphabet, ck.alphabet);
  EXPECT_EQ(back.phase, Phase::kNer);
  EXPECT_EQ(back.epoch, 3);
  EXPECT_EQ(back.metrics, ck.metrics);
  std::mt19937_64 rng(6);
  const FeatureMatrix x = random_features(rng, 8, 3);
  EXPECT_EQ(back.net.forward(x), ck.net.forward(x));
}

class CorruptCheckpoint : public ::testing::Test {
 protected:
  void SetUp() override {
    Checkpoint ck;
    ck.alphabet = phase_alphabet(U" ab", Phase::kAsr, false);
    NetConfig c = tiny_config();
    c.output_size = ck.alphabet.size();
    ck.net = Net(c);
    path_ = temp_path("corrupt.ckpt");
    save_checkpoint(path_, ck);
    std::ifstream in(path_, std::ios::binary);
    bytes_.assign(std::istreambuf_iterator<char>(in), {});
  }
  void write(const std::string& bytes) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out << bytes;
  }
  fs::path path_;
  std::string bytes_;
};

TEST_F(CorruptCheckpoint, VersionMismatch) {
  std::string b = bytes_;
  b[4] = 9;
  write(b);
  EXPECT_THROW(load_checkpoint(path_), DataError);
}

TEST_F(CorruptCheckpoint, TruncatedPayload) {
  write(bytes_.substr(0, bytes_.size() - 12));
  EXPECT_THROW(load_checkpoint(path_), DataError);
}

TEST_F(CorruptCheckpoint, TrailingBytes) {
  write(bytes_ + "xx");
  EXPECT_THROW(load_checkpoint(path_), DataError);
}

TEST_F(CorruptCheckpoint, BadMagic) {
  std::string b = bytes_;
  b[0] = 'X';
  write(b);
  EXPECT_THROW(load_checkpoint(path_), DataError);
}

TEST(Checkpoint, DimensionMismatchWithAlphabet) {
  Checkpoint ck;
  ck.alphabet = phase_alphabet(U" ab", Phase::kNer, true);
  NetConfig c = tiny_config();
  c.output_size = 4;
  ck.net = Net(c);
  const fs::path path = temp_path("mismatch.ckpt");
  save_checkpoint(path, ck);
  EXPECT_THROW(load_checkpoint(path), DataError);
}

TEST(NetConfig, JsonRoundTripAndUnknownField) {
  NetConfig c = tiny_config();
  c.gain_range = {-0.1, 0.3};
  const NetConfig back = net_config_from_json(net_config_to_json(c));
  EXPECT_EQ(net_config_to_json(back), net_config_to_json(c));
  EXPECT_THROW(net_config_from_json({{"hiden", 3}}), DataError);
}

}  // namespace
}  // namespace nerctc
