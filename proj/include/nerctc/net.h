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

#ifndef NERCTC_NET_H_
#define NERCTC_NET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerctc/alphabet.h"
#include "nerctc/corpus.h"
#include "nerctc/ctc.h"

namespace nerctc {

struct NetConfig {
  int feature_dim = 16;
  int conv_layers = 1;  // nc
  int conv_channels = 64;
  int conv_kernel = 5;
  int conv_stride = 2;  // applied by the first convolution only
  int rnn_layers = 2;   // nr, each bidirectional
  int hidden = 64;      // per direction
  int output_size = 0;  // |A|, 0 = take it from the alphabet
  uint64_t seed = 1;

  // Optimization.
  double learning_rate = 0.02;
  double momentum = 0.9;
  double lr_decay = 1.0;  // multiplicative, per epoch
  double clip_norm = 5.0;
  int epochs = 20;
  int batch_size = 16;
  Range gain_range{-0.2, 0.2};
  Range tempo_range{0.9, 1.1};

  // Throws std::invalid_argument naming the bad field.
  void validate() const;
};

nlohmann::json net_config_to_json(const NetConfig& cfg);
// Missing fields keep defaults; unknown fields throw DataError.
NetConfig net_config_from_json(const nlohmann::json& doc);

// Convolution front-end, bidirectional GRU stack, and a final affine layer
// producing per-frame logits over the alphabet.
//
// GRU cell, per direction:
//   r = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
//   z = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
//   n = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n))
//   h' = (1 - z) * n + z * h
// Convolutions use zero padding, clipped ReLU activations (0..20), and
// produce ceil(T / stride) frames.
class Net {
 public:
  // Per-utterance forward activations kept for backpropagation.
  struct Tape;
  using Gradients = std::vector<Matrix>;

  Net() = default;
  // Deterministic scaled-uniform initialization from cfg.seed.
  explicit Net(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  // Replaces the optimization fields (and seed) with those of `cfg`; the
  // architecture stays as is.
  void set_optimization(const NetConfig& cfg);
  int output_size() const { return cfg_.output_size; }
  int output_length(int frames) const;

  // Throws std::invalid_argument on feature-dimension mismatch or T = 0.
  Matrix forward(const FeatureMatrix& features) const;
  Matrix forward(const FeatureMatrix& features, Tape* tape) const;
  // Accumulates d loss / d params into `grads` given d loss / d logits.
  void backward(const Tape& tape, const Matrix& dlogits, Gradients& grads) const;

  Gradients zero_gradients() const;
  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }
  // Index of the first output-layer parameter; everything before it is a
  // lower layer.
  size_t output_param_begin() const { return static_cast<size_t>(out_w_); }

  // Per-dimension standardization applied to input frames.
  void set_normalization(const Eigen::VectorXd& mean, const Eigen::VectorXd& inv_std);
  const Eigen::VectorXd& norm_mean() const { return mean_; }
  const Eigen::VectorXd& norm_inv_std() const { return inv_std_; }

  // Copies every layer below the output layer and builds a new output layer
  // of `output_size` rows. With keep_rows, rows [0, old size) are copied and
  // only the new rows are freshly initialized; otherwise the whole layer is
  // re-initialized.
  Net extended(int output_size, uint64_t seed, bool keep_rows) const;

 private:
  struct ConvLayer {
    int w, b, in_dim, kernel, stride;
  };
  struct GruDirection {
    int wx, wh, bx, bh;
  };
  struct GruLayer {
    GruDirection fwd, bwd;
    int in_dim;
  };

  int add_param(const std::string& name, int rows, int cols, double bound, uint64_t& state);

  NetConfig cfg_;
  std::vector<Matrix> params_;
  std::vector<std::string> names_;
  std::vector<ConvLayer> conv_;
  std::vector<GruLayer> gru_;
  int out_w_ = -1;
  int out_b_ = -1;
  Eigen::VectorXd mean_;
  Eigen::VectorXd inv_std_;
};

struct Net::Tape {
  struct Conv {
    Matrix cols;  // im2col input
    Matrix pre;   // pre-activation
    Matrix out;
  };
  struct Direction {
    Matrix r, z, n, ghn, h;
  };
  struct Gru {
    Direction fwd, bwd;
    Matrix out;  // T x 2H
  };
  Matrix input;  // normalized features
  std::vector<Conv> conv;
  std::vector<Gru> gru;
};

enum class Phase { kAsr, kNer };
std::string_view phase_name(Phase p);
Phase phase_from_name(std::string_view name);

struct Checkpoint {
  Net net;
  Alphabet alphabet;
  Phase phase = Phase::kAsr;
  bool starred = false;
  int epoch = 0;
  nlohmann::json metrics = nlohmann::json::array();
};

// "NCKP", u32 version, u64 length + JSON metadata (config, alphabet, phase,
// epoch, metrics), u32 tensor count, then per tensor: u32 name length,
// name, u64 rows, u64 cols, rows*cols float64. All little-endian. Written
// atomically.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nerctc

#endif  // NERCTC_NET_H_
