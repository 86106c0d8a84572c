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

#include "nerctc/ctc.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nerctc {

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

Matrix log_softmax_rows(const Matrix& logits, const std::vector<bool>& allowed) {
  const bool masked = !allowed.empty();
  if (masked && static_cast<Eigen::Index>(allowed.size()) != logits.cols()) {
    throw std::invalid_argument("mask width does not match lattice width");
  }
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    double m = kNegInf;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      if (!masked || allowed[k]) m = std::max(m, logits(t, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      if (!masked || allowed[k]) sum += std::exp(logits(t, k) - m);
    }
    const double log_z = m + std::log(sum);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      out(t, k) = (!masked || allowed[k]) ? logits(t, k) - log_z : kNegInf;
    }
  }
  return out;
}

int ctc_min_frames(std::span<const int> target) {
  int n = static_cast<int>(target.size());
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

namespace {

void check_target(std::span<const int> target, Eigen::Index width, int blank) {
  for (int l : target) {
    if (l == blank) throw std::invalid_argument("blank in CTC target");
    if (l < 0 || l >= width) {
      throw std::invalid_argument("CTC target label out of range: " + std::to_string(l));
    }
  }
}

// Label at position s of the blank-interleaved target (length 2L+1).
inline int extended_label(std::span<const int> target, int s, int blank) {
  return (s % 2 == 0) ? blank : target[s / 2];
}

// alpha(t, s): log mass of prefixes of length t+1 ending in state s,
// including the emission at t.
Matrix forward_lattice(const Matrix& log_probs, std::span<const int> target, int blank) {
  const Eigen::Index T = log_probs.rows();
  const int S = 2 * static_cast<int>(target.size()) + 1;
  Matrix alpha = Matrix::Constant(T, S, kNegInf);
  alpha(0, 0) = log_probs(0, blank);
  if (S > 1) alpha(0, 1) = log_probs(0, target[0]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const int l = extended_label(target, s, blank);
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_sum_exp(a, alpha(t - 1, s - 1));
      if (s >= 2 && l != blank && l != extended_label(target, s - 2, blank)) {
        a = log_sum_exp(a, alpha(t - 1, s - 2));
      }
      alpha(t, s) = a == kNegInf ? kNegInf : a + log_probs(t, l);
    }
  }
  return alpha;
}

// beta(t, s): log mass of completing from state s at t, excluding the
// emission at t.
Matrix backward_lattice(const Matrix& log_probs, std::span<const int> target, int blank) {
  const Eigen::Index T = log_probs.rows();
  const int S = 2 * static_cast<int>(target.size()) + 1;
  Matrix beta = Matrix::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      const int l = extended_label(target, s, blank);
      double b = beta(t + 1, s) + log_probs(t + 1, l);
      if (s + 1 < S) {
        b = log_sum_exp(b, beta(t + 1, s + 1) +
                               log_probs(t + 1, extended_label(target, s + 1, blank)));
      }
      if (s + 2 < S) {
        const int l2 = extended_label(target, s + 2, blank);
        if (l2 != blank && l2 != l) {
          b = log_sum_exp(b, beta(t + 1, s + 2) + log_probs(t + 1, l2));
        }
      }
      beta(t, s) = b;
    }
  }
  return beta;
}

}  // namespace

double ctc_log_likelihood(const Matrix& log_probs, std::span<const int> target, int blank) {
  check_target(target, log_probs.cols(), blank);
  const Eigen::Index T = log_probs.rows();
  if (T == 0) return target.empty() ? 0.0 : kNegInf;
  if (ctc_min_frames(target) > T) return kNegInf;
  const Matrix alpha = forward_lattice(log_probs, target, blank);
  const int S = 2 * static_cast<int>(target.size()) + 1;
  double ll = alpha(T - 1, S - 1);
  if (S > 1) ll = log_sum_exp(ll, alpha(T - 1, S - 2));
  return ll;
}

CtcResult ctc_loss(const Matrix& logits, std::span<const int> target, int blank) {
  check_target(target, logits.cols(), blank);
  CtcResult result;
  const Eigen::Index T = logits.rows();
  result.grad = Matrix::Zero(T, logits.cols());
  if (T == 0 || ctc_min_frames(target) > T) return result;

  const Matrix log_probs = log_softmax_rows(logits);
  const Matrix alpha = forward_lattice(log_probs, target, blank);
  const Matrix beta = backward_lattice(log_probs, target, blank);
  const int S = 2 * static_cast<int>(target.size()) + 1;
  double ll = alpha(T - 1, S - 1);
  if (S > 1) ll = log_sum_exp(ll, alpha(T - 1, S - 2));
  if (ll == kNegInf) return result;
  result.loss = -ll;

  // grad = softmax - occupancy, occupancy(t, k) = sum_{s: l_s = k}
  // exp(alpha + beta - ll).
  std::vector<double> occ(logits.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (int s = 0; s < S; ++s) {
      const int l = extended_label(target, s, blank);
      occ[l] = log_sum_exp(occ[l], alpha(t, s) + beta(t, s));
    }
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      result.grad(t, k) = std::exp(log_probs(t, k)) - std::exp(occ[k] - ll);
    }
  }
  return result;
}

double ctc_loss_bruteforce(const Matrix& logits, std::span<const int> target, int blank) {
  check_target(target, logits.cols(), blank);
  const Eigen::Index T = logits.rows();
  const Eigen::Index A = logits.cols();
  const double space = std::pow(static_cast<double>(A), static_cast<double>(T));
  if (space > 1e7) throw std::invalid_argument("brute-force search space too large");
  const Matrix log_probs = log_softmax_rows(logits);
  std::vector<int> path(T, 0);
  const std::vector<int> wanted(target.begin(), target.end());
  double total = kNegInf;
  const auto n = static_cast<long long>(std::llround(space));
  for (long long code = 0; code < n; ++code) {
    long long c = code;
    double lp = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % A);
      c /= A;
      lp += log_probs(t, path[t]);
    }
    if (collapse(path, blank) == wanted) total = log_sum_exp(total, lp);
  }
  return total == kNegInf ? kInf : -total;
}

std::vector<int> collapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int l : path) {
    if (l != prev && l != blank) out.push_back(l);
    prev = l;
  }
  return out;
}

std::vector<int> greedy_decode(const Matrix& logits, int blank, const std::vector<bool>& allowed) {
  if (!allowed.empty() && static_cast<Eigen::Index>(allowed.size()) != logits.cols()) {
    throw std::invalid_argument("greedy_decode: mask size does not match the lattice width");
  }
  std::vector<int> path(logits.rows());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    int best = blank;
    double best_score = logits(t, blank);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      if (!allowed.empty() && !allowed[k] && k != blank) continue;
      if (logits(t, k) > best_score) {
        best_score = logits(t, k);
        best = static_cast<int>(k);
      }
    }
    path[t] = best;
  }
  return collapse(path, blank);
}

}  // namespace nerctc
