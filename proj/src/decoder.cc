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

#include "nerctc/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "nerctc/utf8.h"

namespace nerctc {

void DecoderConfig::validate() const {
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (n_best < 1) throw std::invalid_argument("n_best must be >= 1");
  if (n_best > beam_width) throw std::invalid_argument("n_best must be <= beam_width");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("alpha and beta must be finite");
  }
}

int word_count(std::span<const std::string> tokens) {
  int n = 0;
  for (const auto& t : tokens) {
    const std::u32string cps = utf8::decode(t);
    if (cps.size() == 1 && (is_marker(cps[0]) || cps[0] == kStar)) continue;
    ++n;
  }
  return n;
}

std::vector<bool> base_symbol_mask(const Alphabet& alphabet) {
  std::vector<bool> mask(alphabet.size(), false);
  mask[Alphabet::kBlank] = true;
  for (int id = 1; id < alphabet.size(); ++id) mask[id] = alphabet.is_base_id(id);
  return mask;
}

namespace {

Matrix decoder_log_probs(const Matrix& logits, const Alphabet& alphabet,
                         const DecoderConfig& cfg) {
  if (logits.cols() != alphabet.size()) {
    throw std::invalid_argument("lattice width " + std::to_string(logits.cols()) +
                                " does not match alphabet size " +
                                std::to_string(alphabet.size()));
  }
  if (!cfg.base_only) return log_softmax_rows(logits);
  return log_softmax_rows(logits, base_symbol_mask(alphabet));
}

// Incremental token state of a prefix: completed-token LM mass, the LM
// context, the completed word count and the partial word being spelled.
struct TokenState {
  std::vector<int> context;
  std::string pending;
  double lm_logp = 0.0;
  int wc = 0;
};

class TokenScorer {
 public:
  TokenScorer(const NgramLM* lm, const Alphabet& alphabet) : lm_(lm), alphabet_(alphabet) {
    for (int id = 1; id < alphabet.size(); ++id) {
      symbols_.push_back(utf8::encode(alphabet.symbol(id)));
    }
  }

  TokenState initial() const {
    TokenState s;
    if (lm_ && lm_->order() > 1) s.context = lm_->initial_context();
    return s;
  }

  TokenState extend(const TokenState& from, int id) const {
    TokenState s = from;
    const char32_t c = alphabet_.symbol(id);
    if (c == kSpace) {
      complete_pending(s);
    } else if (c == kStar || is_marker(c)) {
      complete_pending(s);
      complete(s, symbols_[id - 1], /*lexical=*/false);
    } else {
      s.pending += symbols_[id - 1];
    }
    return s;
  }

  // Completes the pending word and closes the sentence.
  TokenState finish(const TokenState& from) const {
    TokenState s = from;
    complete_pending(s);
    if (lm_) s.lm_logp += lm_->log_prob(s.context, NgramLM::kEos);
    return s;
  }

 private:
  void complete_pending(TokenState& s) const {
    if (s.pending.empty()) return;
    std::string word;
    word.swap(s.pending);
    complete(s, word, /*lexical=*/true);
  }

  void complete(TokenState& s, const std::string& token, bool lexical) const {
    if (lexical) ++s.wc;
    if (!lm_) return;
    const int id = lm_->token_id(token);
    s.lm_logp += lm_->log_prob(s.context, id);
    lm_->advance(s.context, id);
  }

  const NgramLM* lm_;
  const Alphabet& alphabet_;
  std::vector<std::string> symbols_;
};

struct LabelsHash {
  size_t operator()(const std::vector<int>& k) const {
    uint64_t h = 1469598103934665603ULL;
    for (int x : k) {
      h ^= static_cast<uint64_t>(x);
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};

struct Beam {
  std::vector<int> labels;
  double log_blank = kNegInf;
  double log_nonblank = kNegInf;
  TokenState tokens;

  double total() const { return log_sum_exp(log_blank, log_nonblank); }
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.q != b.q) return a.q > b.q;
  return a.text < b.text;
}

}  // namespace

Hypothesis score_q(const std::string& text, const Matrix& logits, const NgramLM* lm,
                   const Alphabet& alphabet, const DecoderConfig& cfg) {
  const Matrix log_probs = decoder_log_probs(logits, alphabet, cfg);
  Hypothesis h;
  h.text = text;
  h.labels = alphabet.to_ids(text);
  h.ctc_logp = ctc_log_likelihood(log_probs, h.labels, Alphabet::kBlank);
  const std::vector<std::string> tokens = tokenize(text);
  h.lm_logp = lm ? lm->score(tokens) : 0.0;
  h.wc = word_count(tokens);
  h.q = h.ctc_logp == kNegInf ? kNegInf
                              : h.ctc_logp + cfg.alpha * h.lm_logp + cfg.beta * h.wc;
  return h;
}

std::vector<Hypothesis> beam_search(const Matrix& logits, const NgramLM* lm,
                                    const Alphabet& alphabet, const DecoderConfig& cfg) {
  cfg.validate();
  const Matrix log_probs = decoder_log_probs(logits, alphabet, cfg);
  const TokenScorer scorer(lm, alphabet);
  const int blank = Alphabet::kBlank;
  const int width = alphabet.size();

  std::vector<Beam> beams(1);
  beams[0].log_blank = 0.0;
  beams[0].tokens = scorer.initial();

  std::vector<Beam> next;
  std::unordered_map<std::vector<int>, size_t, LabelsHash> index;
  std::vector<int> symbols;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    next.clear();
    index.clear();
    symbols.clear();
    for (int k = 1; k < width; ++k) {
      const double lp = log_probs(t, k);
      if (lp == kNegInf) continue;
      if (cfg.prune_threshold && lp < *cfg.prune_threshold) continue;
      symbols.push_back(k);
    }
    auto slot = [&](std::vector<int>&& labels, const Beam& parent, int appended) -> size_t {
      auto it = index.find(labels);
      if (it != index.end()) return it->second;
      Beam b;
      b.tokens = appended < 0 ? parent.tokens : scorer.extend(parent.tokens, appended);
      b.labels = std::move(labels);
      index.emplace(b.labels, next.size());
      next.push_back(std::move(b));
      return next.size() - 1;
    };
    const double lp_blank = log_probs(t, blank);
    for (const Beam& beam : beams) {
      const double total = beam.total();
      {
        const size_t i = slot(std::vector<int>(beam.labels), beam, -1);
        if (lp_blank != kNegInf) {
          next[i].log_blank = log_sum_exp(next[i].log_blank, total + lp_blank);
        }
      }
      const int last = beam.labels.empty() ? -1 : beam.labels.back();
      for (int c : symbols) {
        const double lp = log_probs(t, c);
        if (c == last) {
          // Repeat without an intervening blank stays in the same prefix.
          const size_t same = slot(std::vector<int>(beam.labels), beam, -1);
          next[same].log_nonblank = log_sum_exp(next[same].log_nonblank, beam.log_nonblank + lp);
          if (beam.log_blank == kNegInf) continue;
          std::vector<int> ext = beam.labels;
          ext.push_back(c);
          const size_t i = slot(std::move(ext), beam, c);
          next[i].log_nonblank = log_sum_exp(next[i].log_nonblank, beam.log_blank + lp);
        } else {
          std::vector<int> ext = beam.labels;
          ext.push_back(c);
          const size_t i = slot(std::move(ext), beam, c);
          next[i].log_nonblank = log_sum_exp(next[i].log_nonblank, total + lp);
        }
      }
    }
    // Keep the best beam_width prefixes under the partial fused score.
    std::vector<std::pair<double, size_t>> ranked;
    ranked.reserve(next.size());
    for (size_t i = 0; i < next.size(); ++i) {
      const double mass = next[i].total();
      if (mass == kNegInf) continue;
      ranked.emplace_back(mass + cfg.alpha * next[i].tokens.lm_logp +
                              cfg.beta * next[i].tokens.wc,
                          i);
    }
    auto order = [&](const std::pair<double, size_t>& a, const std::pair<double, size_t>& b) {
      if (a.first != b.first) return a.first > b.first;
      return next[a.second].labels < next[b.second].labels;
    };
    const size_t keep = std::min<size_t>(ranked.size(), cfg.beam_width);
    std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(), order);
    beams.clear();
    for (size_t r = 0; r < keep; ++r) beams.push_back(std::move(next[ranked[r].second]));
  }

  std::vector<Hypothesis> out;
  out.reserve(beams.size());
  for (const Beam& beam : beams) {
    Hypothesis h;
    h.labels = beam.labels;
    h.text = alphabet.from_ids(beam.labels);
    h.ctc_logp = ctc_log_likelihood(log_probs, beam.labels, blank);
    if (h.ctc_logp == kNegInf) continue;
    const TokenState done = scorer.finish(beam.tokens);
    h.lm_logp = done.lm_logp;
    h.wc = done.wc;
    h.q = h.ctc_logp + cfg.alpha * h.lm_logp + cfg.beta * h.wc;
    out.push_back(std::move(h));
  }
  std::sort(out.begin(), out.end(), better);
  if (out.size() > static_cast<size_t>(cfg.n_best)) out.resize(cfg.n_best);
  return out;
}

Hypothesis exhaustive_oracle(const Matrix& logits, const NgramLM* lm, const Alphabet& alphabet,
                             double alpha, double beta) {
  if (logits.cols() != alphabet.size()) {
    throw std::invalid_argument("lattice width does not match alphabet size");
  }
  const Eigen::Index T = logits.rows();
  const Eigen::Index A = logits.cols();
  const double space = std::pow(static_cast<double>(A), static_cast<double>(T));
  if (space > 1e6) throw std::invalid_argument("oracle search space too large");
  const Matrix log_probs = log_softmax_rows(logits);

  std::map<std::vector<int>, double> classes;
  std::vector<int> path(T);
  const auto n = static_cast<long long>(std::llround(space));
  for (long long code = 0; code < n; ++code) {
    long long c = code;
    double lp = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % A);
      c /= A;
      lp += log_probs(t, path[t]);
    }
    auto [it, inserted] = classes.try_emplace(collapse(path, Alphabet::kBlank), lp);
    if (!inserted) it->second = log_sum_exp(it->second, lp);
  }

  Hypothesis best;
  for (const auto& [labels, lp] : classes) {
    Hypothesis h;
    h.labels = labels;
    h.text = alphabet.from_ids(labels);
    const std::vector<std::string> tokens = tokenize(h.text);
    h.ctc_logp = lp;
    h.lm_logp = lm ? lm->score(tokens) : 0.0;
    h.wc = word_count(tokens);
    h.q = lp + alpha * h.lm_logp + beta * h.wc;
    if (best.q == kNegInf || better(h, best)) best = std::move(h);
  }
  return best;
}

nlohmann::json decode_record(const std::string& id, const std::vector<Hypothesis>& nbest) {
  nlohmann::json r;
  r["id"] = id;
  r["nbest"] = nlohmann::json::array();
  for (const auto& h : nbest) {
    r["nbest"].push_back(
        {{"tagged", h.text}, {"Q", h.q}, {"ctc_logp", h.ctc_logp}, {"lm_logp", h.lm_logp}, {"wc", h.wc}});
  }
  return r;
}

}  // namespace nerctc
