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

#ifndef NERCTC_CTC_H_
#define NERCTC_CTC_H_

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace nerctc {

// T x |A| row-major matrices of logits or log-probabilities.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b);

// Row-wise log-softmax. When `allowed` is non-empty, columns with
// allowed[k] == false get -inf and the rest are renormalized.
Matrix log_softmax_rows(const Matrix& logits, const std::vector<bool>& allowed = {});

struct CtcResult {
  // Negative log-likelihood in nats; +inf when the target cannot be
  // produced in T frames.
  double loss = kInf;
  // d loss / d logits; zero when infeasible.
  Matrix grad;

  bool feasible() const { return loss < kInf; }
};

// Minimum number of frames a target needs: its length plus one blank
// between each pair of adjacent equal labels.
int ctc_min_frames(std::span<const int> target);

// Exact CTC loss and its gradient w.r.t. the logits (softmax fused in).
// Throws std::invalid_argument if the target contains the blank or an
// out-of-range label.
CtcResult ctc_loss(const Matrix& logits, std::span<const int> target, int blank = 0);

// log p(target | x) from per-frame log-probabilities, forward pass only.
// Accepts an empty target. Returns -inf when infeasible.
double ctc_log_likelihood(const Matrix& log_probs, std::span<const int> target,
                          int blank = 0);

// Test oracle: enumerates every path. Throws std::invalid_argument when
// |A|^T exceeds 1e7.
double ctc_loss_bruteforce(const Matrix& logits, std::span<const int> target,
                           int blank = 0);

// Merges adjacent repeats, then removes blanks.
std::vector<int> collapse(std::span<const int> path, int blank = 0);

// Best-path decoding; `allowed` restricts the argmax (the blank is always
// allowed).
std::vector<int> greedy_decode(const Matrix& logits, int blank = 0,
                               const std::vector<bool>& allowed = {});

}  // namespace nerctc

#endif  // NERCTC_CTC_H_
