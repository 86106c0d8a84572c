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

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/io.h"

namespace nerctc {

namespace {

constexpr char kMagic[4] = {'N', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;
constexpr double kReluCap = 20.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Uniform in [-bound, bound] from a splitmix64 stream.
double next_uniform(uint64_t& state, double bound) {
  state = derive_seed(state, 0x9e3779b97f4a7c15ULL);
  const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * bound;
}

void fill_uniform(Matrix& m, double bound, uint64_t& state) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = next_uniform(state, bound);
}

}  // namespace

void NetConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid net config: ") + what);
  };
  need(feature_dim >= 1, "feature_dim must be >= 1");
  need(conv_layers >= 0, "conv_layers must be >= 0");
  need(conv_layers == 0 || conv_channels >= 1, "conv_channels must be >= 1");
  need(conv_layers == 0 || conv_kernel >= 1, "conv_kernel must be >= 1");
  need(conv_layers == 0 || conv_stride >= 1, "conv_stride must be >= 1");
  need(rnn_layers >= 1, "rnn_layers must be >= 1");
  need(hidden >= 1, "hidden must be >= 1");
  need(output_size >= 2, "output_size must be >= 2");
  need(learning_rate > 0.0, "learning_rate must be > 0");
  need(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  need(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must be in (0, 1]");
  need(clip_norm > 0.0, "clip_norm must be > 0");
  need(epochs >= 0, "epochs must be >= 0");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(gain_range.lo <= gain_range.hi, "gain_range lo > hi");
  need(tempo_range.lo > 0.0 && tempo_range.lo <= tempo_range.hi, "tempo_range must be positive, lo <= hi");
}

nlohmann::json net_config_to_json(const NetConfig& c) {
  return {
      {"feature_dim", c.feature_dim},
      {"conv_layers", c.conv_layers},
      {"conv_channels", c.conv_channels},
      {"conv_kernel", c.conv_kernel},
      {"conv_stride", c.conv_stride},
      {"rnn_layers", c.rnn_layers},
      {"hidden", c.hidden},
      {"output_size", c.output_size},
      {"seed", c.seed},
      {"learning_rate", c.learning_rate},
      {"momentum", c.momentum},
      {"lr_decay", c.lr_decay},
      {"clip_norm", c.clip_norm},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"gain_range", {c.gain_range.lo, c.gain_range.hi}},
      {"tempo_range", {c.tempo_range.lo, c.tempo_range.hi}},
  };
}

NetConfig net_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("net config must be a JSON object");
  NetConfig c;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "feature_dim") c.feature_dim = value.get<int>();
      else if (key == "conv_layers") c.conv_layers = value.get<int>();
      else if (key == "conv_channels") c.conv_channels = value.get<int>();
      else if (key == "conv_kernel") c.conv_kernel = value.get<int>();
      else if (key == "conv_stride") c.conv_stride = value.get<int>();
      else if (key == "rnn_layers") c.rnn_layers = value.get<int>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "output_size") c.output_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "lr_decay") c.lr_decay = value.get<double>();
      else if (key == "clip_norm") c.clip_norm = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "gain_range" || key == "tempo_range") {
        if (!value.is_array() || value.size() != 2) throw DataError("expected [lo, hi]");
        Range r{value[0].get<double>(), value[1].get<double>()};
        (key == "gain_range" ? c.gain_range : c.tempo_range) = r;
      } else {
        throw DataError("unknown field");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("net config field '" + key + "': " + e.what());
    } catch (const DataError& e) {
      throw DataError("net config field '" + key + "': " + e.what());
    }
  }
  return c;
}

int Net::add_param(const std::string& name, int rows, int cols, double bound,
                   uint64_t& state) {
  Matrix m(rows, cols);
  fill_uniform(m, bound, state);
  params_.push_back(std::move(m));
  names_.push_back(name);
  return static_cast<int>(params_.size()) - 1;
}

Net::Net(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  uint64_t state = derive_seed(cfg.seed, 0x6e6574);
  int dim = cfg.feature_dim;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const std::string p = "conv" + std::to_string(l);
    const int fan_in = cfg.conv_kernel * dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    ConvLayer layer;
    layer.in_dim = dim;
    layer.kernel = cfg.conv_kernel;
    layer.stride = l == 0 ? cfg.conv_stride : 1;
    layer.w = add_param(p + ".w", cfg.conv_channels, fan_in, bound, state);
    layer.b = add_param(p + ".b", 1, cfg.conv_channels, bound, state);
    conv_.push_back(layer);
    dim = cfg.conv_channels;
  }
  const int H = cfg.hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    GruLayer layer;
    layer.in_dim = dim;
    for (int d = 0; d < 2; ++d) {
      const std::string p = "gru" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      GruDirection g;
      g.wx = add_param(p + ".wx", 3 * H, dim, bound, state);
      g.wh = add_param(p + ".wh", 3 * H, H, bound, state);
      g.bx = add_param(p + ".bx", 1, 3 * H, bound, state);
      g.bh = add_param(p + ".bh", 1, 3 * H, bound, state);
      (d == 0 ? layer.fwd : layer.bwd) = g;
    }
    gru_.push_back(layer);
    dim = 2 * H;
  }
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  out_w_ = add_param("out.w", cfg.output_size, dim, out_bound, state);
  out_b_ = add_param("out.b", 1, cfg.output_size, out_bound, state);
  mean_ = Eigen::VectorXd::Zero(cfg.feature_dim);
  inv_std_ = Eigen::VectorXd::Ones(cfg.feature_dim);
}

void Net::set_optimization(const NetConfig& cfg) {
  NetConfig next = cfg_;
  next.seed = cfg.seed;
  next.learning_rate = cfg.learning_rate;
  next.momentum = cfg.momentum;
  next.lr_decay = cfg.lr_decay;
  next.clip_norm = cfg.clip_norm;
  next.epochs = cfg.epochs;
  next.batch_size = cfg.batch_size;
  next.gain_range = cfg.gain_range;
  next.tempo_range = cfg.tempo_range;
  next.validate();
  cfg_ = next;
}

int Net::output_length(int frames) const {
  int t = frames;
  for (const auto& c : conv_) t = (t + c.stride - 1) / c.stride;
  return t;
}

void Net::set_normalization(const Eigen::VectorXd& mean, const Eigen::VectorXd& inv_std) {
  if (mean.size() != cfg_.feature_dim || inv_std.size() != cfg_.feature_dim) {
    throw std::invalid_argument("normalization size does not match feature_dim");
  }
  mean_ = mean;
  inv_std_ = inv_std;
}

Net::Gradients Net::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Matrix::Zero(p.rows(), p.cols()));
  return g;
}

Matrix Net::forward(const FeatureMatrix& features) const {
  Tape tape;
  return forward(features, &tape);
}

Matrix Net::forward(const FeatureMatrix& features, Tape* tape) const {
  if (params_.empty()) throw std::invalid_argument("forward on an uninitialized net");
  if (features.cols() != cfg_.feature_dim) {
    throw std::invalid_argument("feature dimension " + std::to_string(features.cols()) +
                                " does not match net feature_dim " +
                                std::to_string(cfg_.feature_dim));
  }
  if (features.rows() == 0) throw std::invalid_argument("forward on an empty feature sequence");

  tape->input = (features.cast<double>().rowwise() - mean_.transpose()).array().rowwise() *
                inv_std_.transpose().array();
  const Matrix* x = &tape->input;

  tape->conv.resize(conv_.size());
  for (size_t l = 0; l < conv_.size(); ++l) {
    const ConvLayer& c = conv_[l];
    Tape::Conv& tc = tape->conv[l];
    const Eigen::Index T = x->rows();
    const Eigen::Index t_out = (T + c.stride - 1) / c.stride;
    const int pad = (c.kernel - 1) / 2;
    tc.cols.setZero(t_out, static_cast<Eigen::Index>(c.kernel) * c.in_dim);
    for (Eigen::Index t = 0; t < t_out; ++t) {
      for (int j = 0; j < c.kernel; ++j) {
        const Eigen::Index src = t * c.stride - pad + j;
        if (src < 0 || src >= T) continue;
        tc.cols.block(t, static_cast<Eigen::Index>(j) * c.in_dim, 1, c.in_dim) = x->row(src);
      }
    }
    tc.pre.noalias() = tc.cols * params_[c.w].transpose();
    tc.pre.rowwise() += params_[c.b].row(0);
    tc.out = tc.pre.cwiseMax(0.0).cwiseMin(kReluCap);
    x = &tc.out;
  }

  const int H = cfg_.hidden;
  tape->gru.resize(gru_.size());
  Eigen::VectorXd h(H), gh(3 * H);
  for (size_t l = 0; l < gru_.size(); ++l) {
    const GruLayer& layer = gru_[l];
    Tape::Gru& tg = tape->gru[l];
    const Eigen::Index T = x->rows();
    for (int d = 0; d < 2; ++d) {
      const GruDirection& g = d == 0 ? layer.fwd : layer.bwd;
      Tape::Direction& td = d == 0 ? tg.fwd : tg.bwd;
      Matrix gx = *x * params_[g.wx].transpose();
      gx.rowwise() += params_[g.bx].row(0);
      td.r.resize(T, H);
      td.z.resize(T, H);
      td.n.resize(T, H);
      td.ghn.resize(T, H);
      td.h.resize(T, H);
      const Matrix& wh = params_[g.wh];
      const auto bh = params_[g.bh].row(0).transpose();
      h.setZero();
      for (Eigen::Index step = 0; step < T; ++step) {
        const Eigen::Index t = d == 0 ? step : T - 1 - step;
        gh.noalias() = wh * h;
        gh += bh;
        for (int i = 0; i < H; ++i) {
          const double r = sigmoid(gx(t, i) + gh(i));
          const double z = sigmoid(gx(t, H + i) + gh(H + i));
          const double n = std::tanh(gx(t, 2 * H + i) + r * gh(2 * H + i));
          td.r(t, i) = r;
          td.z(t, i) = z;
          td.n(t, i) = n;
          td.ghn(t, i) = gh(2 * H + i);
          h(i) = (1.0 - z) * n + z * h(i);
        }
        td.h.row(t) = h.transpose();
      }
    }
    tg.out.resize(T, 2 * H);
    tg.out.leftCols(H) = tg.fwd.h;
    tg.out.rightCols(H) = tg.bwd.h;
    x = &tg.out;
  }

  Matrix logits = *x * params_[out_w_].transpose();
  logits.rowwise() += params_[out_b_].row(0);
  return logits;
}

void Net::backward(const Tape& tape, const Matrix& dlogits, Gradients& grads) const {
  if (grads.size() != params_.size()) throw std::invalid_argument("gradient buffer mismatch");
  const Matrix& top = gru_.empty() ? tape.input : tape.gru.back().out;
  if (dlogits.rows() != top.rows() || dlogits.cols() != cfg_.output_size) {
    throw std::invalid_argument("dlogits shape does not match the forward pass");
  }
  grads[out_w_].noalias() += dlogits.transpose() * top;
  grads[out_b_] += dlogits.colwise().sum();
  Matrix dx = dlogits * params_[out_w_];

  const int H = cfg_.hidden;
  Eigen::VectorXd dh_next(H), dh(H);
  for (size_t li = gru_.size(); li-- > 0;) {
    const GruLayer& layer = gru_[li];
    const Tape::Gru& tg = tape.gru[li];
    const Matrix& input = li == 0 ? (conv_.empty() ? tape.input : tape.conv.back().out)
                                  : tape.gru[li - 1].out;
    const Eigen::Index T = input.rows();
    Matrix dinput = Matrix::Zero(T, layer.in_dim);
    for (int d = 0; d < 2; ++d) {
      const GruDirection& g = d == 0 ? layer.fwd : layer.bwd;
      const Tape::Direction& td = d == 0 ? tg.fwd : tg.bwd;
      const Matrix& wh = params_[g.wh];
      Matrix dgx(T, 3 * H), dgh(T, 3 * H), hprev(T, H);
      dh_next.setZero();
      for (Eigen::Index step = T; step-- > 0;) {
        const Eigen::Index t = d == 0 ? step : T - 1 - step;
        const Eigen::Index tp = d == 0 ? t - 1 : t + 1;
        const bool has_prev = d == 0 ? t > 0 : t + 1 < T;
        dh = dx.block(t, d * H, 1, H).transpose() + dh_next;
        for (int i = 0; i < H; ++i) {
          const double hp = has_prev ? td.h(tp, i) : 0.0;
          hprev(t, i) = hp;
          const double r = td.r(t, i), z = td.z(t, i), n = td.n(t, i);
          const double dn = dh(i) * (1.0 - z) * (1.0 - n * n);
          const double dz = dh(i) * (hp - n) * z * (1.0 - z);
          const double dr = dn * td.ghn(t, i) * r * (1.0 - r);
          dgx(t, i) = dr;
          dgx(t, H + i) = dz;
          dgx(t, 2 * H + i) = dn;
          dgh(t, i) = dr;
          dgh(t, H + i) = dz;
          dgh(t, 2 * H + i) = dn * r;
          dh_next(i) = dh(i) * z;
        }
        dh_next.noalias() += wh.transpose() * dgh.row(t).transpose();
      }
      grads[g.wh].noalias() += dgh.transpose() * hprev;
      grads[g.bh] += dgh.colwise().sum();
      grads[g.wx].noalias() += dgx.transpose() * input;
      grads[g.bx] += dgx.colwise().sum();
      dinput.noalias() += dgx * params_[g.wx];
    }
    dx = std::move(dinput);
  }

  for (size_t li = conv_.size(); li-- > 0;) {
    const ConvLayer& c = conv_[li];
    const Tape::Conv& tc = tape.conv[li];
    const Matrix& input = li == 0 ? tape.input : tape.conv[li - 1].out;
    Matrix dpre = dx;
    for (Eigen::Index i = 0; i < dpre.size(); ++i) {
      const double p = tc.pre.data()[i];
      if (p <= 0.0 || p >= kReluCap) dpre.data()[i] = 0.0;
    }
    grads[c.w].noalias() += dpre.transpose() * tc.cols;
    grads[c.b] += dpre.colwise().sum();
    if (li == 0) break;  // inputs are not trainable
    const Matrix dcols = dpre * params_[c.w];
    Matrix dinput = Matrix::Zero(input.rows(), input.cols());
    const int pad = (c.kernel - 1) / 2;
    for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
      for (int j = 0; j < c.kernel; ++j) {
        const Eigen::Index src = t * c.stride - pad + j;
        if (src < 0 || src >= input.rows()) continue;
        dinput.row(src) += dcols.block(t, static_cast<Eigen::Index>(j) * c.in_dim, 1, c.in_dim);
      }
    }
    dx = std::move(dinput);
  }
}

Net Net::extended(int output_size, uint64_t seed, bool keep_rows) const {
  if (output_size < cfg_.output_size && keep_rows) {
    throw std::invalid_argument("extended output layer cannot shrink");
  }
  Net out = *this;
  out.cfg_.output_size = output_size;
  const Eigen::Index dim = params_[out_w_].cols();
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  uint64_t state = derive_seed(seed, 0x657874);
  Matrix w(output_size, dim), b(1, output_size);
  fill_uniform(w, bound, state);
  fill_uniform(b, bound, state);
  if (keep_rows) {
    w.topRows(cfg_.output_size) = params_[out_w_];
    b.leftCols(cfg_.output_size) = params_[out_b_];
  }
  out.params_[out_w_] = std::move(w);
  out.params_[out_b_] = std::move(b);
  return out;
}

std::string_view phase_name(Phase p) { return p == Phase::kAsr ? "asr" : "ner"; }

Phase phase_from_name(std::string_view name) {
  if (name == "asr") return Phase::kAsr;
  if (name == "ner") return Phase::kNer;
  throw DataError("unknown phase '" + std::string(name) + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Net& net = ckpt.net;
  nlohmann::json meta = {
      {"config", net_config_to_json(net.config())},
      {"alphabet", ckpt.alphabet.to_text()},
      {"phase", phase_name(ckpt.phase)},
      {"starred", ckpt.starred},
      {"epoch", ckpt.epoch},
      {"metrics", ckpt.metrics},
  };
  const std::string blob = meta.dump();
  std::vector<std::pair<std::string, Matrix>> tensors;
  for (size_t i = 0; i < net.params().size(); ++i) {
    tensors.emplace_back(net.param_names()[i], net.params()[i]);
  }
  tensors.emplace_back("norm.mean", net.norm_mean().transpose());
  tensors.emplace_back("norm.inv_std", net.norm_inv_std().transpose());

  io::write_atomic(
      path,
      [&](std::ostream& out) {
        out.write(kMagic, 4);
        io::write_le<uint32_t>(out, kVersion);
        io::write_le<uint64_t>(out, blob.size());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        io::write_le<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
        for (const auto& [name, m] : tensors) {
          io::write_le<uint32_t>(out, static_cast<uint32_t>(name.size()));
          out.write(name.data(), static_cast<std::streamsize>(name.size()));
          io::write_le<uint64_t>(out, static_cast<uint64_t>(m.rows()));
          io::write_le<uint64_t>(out, static_cast<uint64_t>(m.cols()));
          for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<double>(out, m.data()[i]);
        }
      },
      /*binary=*/true);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open checkpoint");
  auto fail = [&](const std::string& what) -> DataError {
    return DataError(path.string() + ": " + what);
  };
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw fail("not a checkpoint (bad magic)");
  }
  uint32_t version = 0;
  if (!io::read_le(in, &version)) throw fail("truncated header");
  if (version != kVersion) {
    throw fail("unsupported checkpoint version " + std::to_string(version));
  }
  uint64_t blob_size = 0;
  if (!io::read_le(in, &blob_size) || blob_size > (1u << 26)) throw fail("corrupt metadata length");
  std::string blob(blob_size, '\0');
  if (!in.read(blob.data(), static_cast<std::streamsize>(blob_size))) throw fail("truncated metadata");

  Checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(blob);
    ckpt.net = Net(net_config_from_json(meta.at("config")));
    ckpt.alphabet = Alphabet::from_text(meta.at("alphabet").get<std::string>());
    ckpt.phase = phase_from_name(meta.at("phase").get<std::string>());
    ckpt.starred = meta.at("starred").get<bool>();
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.metrics = meta.at("metrics");
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("bad metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw fail(std::string("bad metadata: ") + e.what());
  } catch (const DataError& e) {
    throw fail(e.what());
  }
  if (ckpt.net.output_size() != ckpt.alphabet.size()) {
    throw fail("output size does not match the stored alphabet");
  }

  uint32_t count = 0;
  if (!io::read_le(in, &count)) throw fail("truncated tensor table");
  Net& net = ckpt.net;
  const size_t expected = net.params().size() + 2;
  if (count != expected) throw fail("tensor count does not match the config");
  Eigen::VectorXd mean, inv_std;
  for (uint32_t k = 0; k < count; ++k) {
    uint32_t name_len = 0;
    if (!io::read_le(in, &name_len) || name_len > 256) throw fail("corrupt tensor name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw fail("truncated tensor name");
    uint64_t rows = 0, cols = 0;
    if (!io::read_le(in, &rows) || !io::read_le(in, &cols)) throw fail("truncated tensor shape");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Matrix* dst = nullptr;
    if (k < net.params().size()) {
      if (name != net.param_names()[k]) throw fail("unexpected tensor '" + name + "'");
      dst = &net.params()[k];
      if (dst->rows() != m.rows() || dst->cols() != m.cols()) {
        throw fail("tensor '" + name + "' shape does not match the config");
      }
    } else if (rows != 1 || cols != static_cast<uint64_t>(net.config().feature_dim)) {
      throw fail("tensor '" + name + "' shape does not match the config");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (!io::read_le(in, m.data() + i)) throw fail("truncated payload in tensor '" + name + "'");
    }
    if (dst) {
      *dst = std::move(m);
    } else if (name == "norm.mean") {
      mean = m.row(0).transpose();
    } else if (name == "norm.inv_std") {
      inv_std = m.row(0).transpose();
    } else {
      throw fail("unexpected tensor '" + name + "'");
    }
  }
  if (mean.size() == 0 || inv_std.size() == 0) throw fail("missing normalization tensors");
  net.set_normalization(mean, inv_std);
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes after payload");
  return ckpt;
}

}  // namespace nerctc
