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

#ifndef NERCTC_TESTS_ORACLES_H_
#define NERCTC_TESTS_ORACLES_H_

// Slow reference implementations used to check the library. They share no
// code with the code under test beyond plain containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Matrix random_logits(std::mt19937_64& rng, int T, int A, double scale = 2.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(T, A);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Per-frame probabilities by direct exponentiation.
inline std::vector<std::vector<double>> softmax(const Matrix& logits) {
  std::vector<std::vector<double>> p(logits.rows(), std::vector<double>(logits.cols()));
  for (int t = 0; t < logits.rows(); ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < logits.cols(); ++k) mx = std::max(mx, logits(t, k));
    double z = 0.0;
    for (int k = 0; k < logits.cols(); ++k) z += std::exp(logits(t, k) - mx);
    for (int k = 0; k < logits.cols(); ++k) p[t][k] = std::exp(logits(t, k) - mx) / z;
  }
  return p;
}

inline std::vector<int> collapse(const std::vector<int>& path, int blank = 0) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

// Calls fn(path, probability) for every frame-level path.
inline void for_each_path(const std::vector<std::vector<double>>& p,
                          const std::function<void(const std::vector<int>&, double)>& fn) {
  const int T = static_cast<int>(p.size());
  const int A = T == 0 ? 0 : static_cast<int>(p[0].size());
  std::vector<int> path(T, 0);
  while (true) {
    double prob = 1.0;
    for (int t = 0; t < T; ++t) prob *= p[t][path[t]];
    fn(path, prob);
    int t = 0;
    while (t < T && ++path[t] == A) path[t++] = 0;
    if (t == T) return;
  }
}

// Total probability of all paths collapsing to `target`, as -log.
inline double ctc_nll(const Matrix& logits, const std::vector<int>& target) {
  double total = 0.0;
  for_each_path(softmax(logits), [&](const std::vector<int>& path, double prob) {
    if (collapse(path) == target) total += prob;
  });
  return total == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(total);
}

// Label-sequence posteriors: every collapsed sequence with its probability.
inline std::map<std::vector<int>, double> label_posteriors(const Matrix& logits) {
  std::map<std::vector<int>, double> out;
  for_each_path(softmax(logits), [&](const std::vector<int>& path, double prob) {
    out[collapse(path)] += prob;
  });
  return out;
}

// Witten-Bell interpolated word n-gram probabilities computed straight from
// counts, by recursion on the history length.
class WittenBell {
 public:
  WittenBell(const std::vector<std::vector<std::string>>& sentences, int order)
      : order_(order) {
    vocab_ = {"</s>", "<unk>"};
    for (const auto& s : sentences) {
      std::vector<std::string> padded = {"<s>"};
      padded.insert(padded.end(), s.begin(), s.end());
      padded.push_back("</s>");
      for (const auto& w : s) vocab_.insert(w);
      for (size_t i = 1; i < padded.size(); ++i) {
        for (int n = 0; n < order && static_cast<int>(i) - n >= 0; ++n) {
          std::vector<std::string> h(padded.begin() + (i - n), padded.begin() + i);
          follow_[h][padded[i]] += 1.0;
        }
      }
    }
  }

  // Predictable tokens: everything except <s>.
  const std::set<std::string>& vocab() const { return vocab_; }

  double prob(std::vector<std::string> history, const std::string& w) const {
    if (static_cast<int>(history.size()) > order_ - 1) {
      history.erase(history.begin(), history.end() - (order_ - 1));
    }
    const std::string word = vocab_.count(w) ? w : "<unk>";
    return interp(history, word);
  }

 private:
  double interp(const std::vector<std::string>& h, const std::string& w) const {
    const double lower = h.empty() ? 1.0 / vocab_.size()
                                   : interp(std::vector<std::string>(h.begin() + 1, h.end()), w);
    auto it = follow_.find(h);
    if (it == follow_.end()) return lower;
    double total = 0.0, types = 0.0;
    for (const auto& [x, c] : it->second) {
      total += c;
      types += 1.0;
    }
    auto wc = it->second.find(w);
    const double c = wc == it->second.end() ? 0.0 : wc->second;
    return (c + types * lower) / (total + types);
  }

  int order_;
  std::set<std::string> vocab_;
  std::map<std::vector<std::string>, std::map<std::string, double>> follow_;
};

// Central finite differences of f at x along each coordinate.
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

// Entries smaller than `floor` are compared absolutely, so gradients that
// are zero up to rounding do not blow up the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace oracle

#endif  // NERCTC_TESTS_ORACLES_H_
