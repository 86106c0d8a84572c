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

#ifndef NERCTC_LM_H_
#define NERCTC_LM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nerctc {

// Word-token n-gram model with interpolated Witten-Bell smoothing.
//
// For a history h with c(h) > 0 observations and N1+(h) distinct followers:
//
//   P(w | h) = (c(h, w) + N1+(h) * P(w | h')) / (c(h) + N1+(h))
//
// where h' drops the oldest token. Unseen histories back off fully to h'.
// The recursion ends in a uniform distribution over the predicted
// vocabulary (every token except <s>). Sentences are padded with one <s>
// and one </s>.
//
// The trained model is stored in backoff form: each observed n-gram keeps
// its interpolated probability and each observed history keeps
// bow(h) = N1+(h) / (c(h) + N1+(h)), so an ARPA file represents it exactly.
class NgramLM {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;

  NgramLM() = default;

  // Throws std::invalid_argument on order < 1 or an empty corpus.
  static NgramLM train(const std::vector<std::vector<std::string>>& sentences,
                       int order);

  int order() const { return order_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::string& token(int id) const { return vocab_[id]; }
  // Unknown tokens map to <unk>.
  int token_id(std::string_view token) const;

  // Natural-log p(token | context); only the last order-1 context ids are
  // used, most recent last.
  double log_prob(std::span<const int> context, int token) const;

  // Sum of log p over the tokens and the closing </s>, starting from <s>.
  double score(std::span<const std::string> tokens) const;

  // Keeps the last order-1 ids of context + token.
  void advance(std::vector<int>& context, int token) const;
  std::vector<int> initial_context() const { return {kBos}; }

  // Histories observed in training, for normalization checks.
  std::vector<std::vector<int>> observed_histories() const;

  // ARPA text: \data\ header with per-order counts, then per-order
  // sections of "log10(p) <tab> tokens [<tab> log10(bow)]", then \end\.
  void save_arpa(const std::filesystem::path& path) const;
  std::string to_arpa() const;
  static NgramLM load_arpa(const std::filesystem::path& path);
  static NgramLM from_arpa(std::string_view text);

 private:
  struct Entry {
    double log_prob = 0.0;     // natural log
    double log_backoff = 0.0;  // natural log; 0 when never a history
  };
  struct KeyHash {
    size_t operator()(const std::vector<int>& k) const {
      uint64_t h = 1469598103934665603ULL;
      for (int x : k) {
        h ^= static_cast<uint64_t>(x) + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
      }
      return static_cast<size_t>(h);
    }
  };
  using Table = std::unordered_map<std::vector<int>, Entry, KeyHash>;

  int intern(const std::string& token);
  const Entry* lookup(std::span<const int> gram) const;

  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Table> grams_;  // grams_[k] holds (k+1)-grams
};

}  // namespace nerctc

#endif  // NERCTC_LM_H_
