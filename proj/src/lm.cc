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

#include "nerctc/lm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/io.h"

namespace nerctc {

namespace {

const char* const kReserved[] = {"<s>", "</s>", "<unk>"};

// ARPA convention for the never-predicted sentence start.
constexpr double kBosLog10Prob = -99.0;
const double kLn10 = std::log(10.0);

}  // namespace

int NgramLM::intern(const std::string& token) {
  auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(vocab_.size()));
  if (inserted) vocab_.push_back(token);
  return it->second;
}

int NgramLM::token_id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

NgramLM NgramLM::train(const std::vector<std::vector<std::string>>& sentences,
                       int order) {
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (sentences.empty()) throw std::invalid_argument("empty LM training corpus");

  NgramLM lm;
  lm.order_ = order;
  for (const char* r : kReserved) lm.intern(r);
  std::set<std::string> words;
  for (const auto& s : sentences) {
    for (const auto& w : s) {
      for (const char* r : kReserved) {
        if (w == r) throw std::invalid_argument("reserved token '" + w + "' in corpus");
      }
      words.insert(w);
    }
  }
  for (const auto& w : words) lm.intern(w);

  // counts[k][gram] for (k+1)-grams.
  std::vector<std::map<std::vector<int>, double>> counts(order);
  std::vector<int> padded;
  for (const auto& s : sentences) {
    padded.assign(1, kBos);
    for (const auto& w : s) padded.push_back(lm.ids_.at(w));
    padded.push_back(kEos);
    for (size_t i = 1; i < padded.size(); ++i) {
      for (int k = 0; k < order && static_cast<int>(i) - k >= 0; ++k) {
        std::vector<int> gram(padded.begin() + (i - k), padded.begin() + i + 1);
        counts[k][gram] += 1.0;
      }
    }
  }

  // Per-history totals c(h) and distinct-follower counts N1+(h).
  struct HistoryStats {
    double total = 0.0;
    double types = 0.0;
  };
  std::vector<std::map<std::vector<int>, HistoryStats>> hist(order);
  for (int k = 0; k < order; ++k) {
    for (const auto& [gram, c] : counts[k]) {
      std::vector<int> h(gram.begin(), gram.end() - 1);
      auto& st = hist[k][h];
      st.total += c;
      st.types += 1.0;
    }
  }

  lm.grams_.assign(order, Table{});
  const double uniform = 1.0 / (lm.vocab_size() - 1);  // excludes <s>
  {
    const HistoryStats& st = hist[0][{}];
    for (int w = 0; w < lm.vocab_size(); ++w) {
      Entry e;
      if (w == kBos) {
        e.log_prob = kBosLog10Prob * kLn10;
      } else {
        auto it = counts[0].find({w});
        const double c = it == counts[0].end() ? 0.0 : it->second;
        e.log_prob = std::log((c + st.types * uniform) / (st.total + st.types));
      }
      lm.grams_[0][{w}] = e;
    }
  }
  for (int k = 1; k < order; ++k) {
    // Backoff weights for the (k)-token histories live on order-k entries.
    for (const auto& [h, st] : hist[k]) {
      auto it = lm.grams_[k - 1].find(h);
      if (it == lm.grams_[k - 1].end()) {
        throw std::logic_error("history missing from lower-order table");
      }
      it->second.log_backoff = std::log(st.types / (st.total + st.types));
    }
    for (const auto& [gram, c] : counts[k]) {
      const std::vector<int> h(gram.begin(), gram.end() - 1);
      const HistoryStats& st = hist[k].at(h);
      const double lower =
          std::exp(lm.log_prob(std::span(gram).subspan(1, k - 1), gram.back()));
      Entry e;
      e.log_prob = std::log((c + st.types * lower) / (st.total + st.types));
      lm.grams_[k][gram] = e;
    }
  }
  return lm;
}

const NgramLM::Entry* NgramLM::lookup(std::span<const int> gram) const {
  const auto& table = grams_[gram.size() - 1];
  auto it = table.find(std::vector<int>(gram.begin(), gram.end()));
  return it == table.end() ? nullptr : &it->second;
}

double NgramLM::log_prob(std::span<const int> context, int token) const {
  if (token < 0 || token >= vocab_size()) token = kUnk;
  const size_t n = std::min<size_t>(context.size(), order_ - 1);
  std::span<const int> h = context.subspan(context.size() - n, n);
  double backoff = 0.0;
  std::vector<int> gram;
  while (true) {
    gram.assign(h.begin(), h.end());
    gram.push_back(token);
    if (const Entry* e = lookup(gram)) return backoff + e->log_prob;
    if (h.empty()) return backoff + lookup(std::vector<int>{kUnk})->log_prob;
    if (const Entry* he = lookup(h)) backoff += he->log_backoff;
    h = h.subspan(1);
  }
}

void NgramLM::advance(std::vector<int>& context, int token) const {
  context.push_back(token);
  const size_t keep = static_cast<size_t>(order_ - 1);
  if (context.size() > keep) {
    context.erase(context.begin(), context.end() - keep);
  }
}

double NgramLM::score(std::span<const std::string> tokens) const {
  std::vector<int> ctx = initial_context();
  if (order_ == 1) ctx.clear();
  double total = 0.0;
  for (const auto& t : tokens) {
    const int id = token_id(t);
    total += log_prob(ctx, id);
    advance(ctx, id);
  }
  return total + log_prob(ctx, kEos);
}

std::vector<std::vector<int>> NgramLM::observed_histories() const {
  std::vector<std::vector<int>> out;
  out.push_back({});
  for (int k = 0; k + 1 < order_; ++k) {
    for (const auto& [gram, e] : grams_[k]) {
      if (e.log_backoff < 0.0) out.push_back(gram);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string NgramLM::to_arpa() const {
  std::ostringstream out;
  out << "\\data\\\n";
  for (int k = 0; k < order_; ++k) {
    out << "ngram " << (k + 1) << "=" << grams_[k].size() << "\n";
  }
  char buf[64];
  for (int k = 0; k < order_; ++k) {
    out << "\n\\" << (k + 1) << "-grams:\n";
    std::vector<std::pair<std::vector<std::string>, const Entry*>> rows;
    rows.reserve(grams_[k].size());
    for (const auto& [gram, e] : grams_[k]) {
      std::vector<std::string> words;
      for (int id : gram) words.push_back(vocab_[id]);
      rows.emplace_back(std::move(words), &e);
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [words, e] : rows) {
      const bool is_bos = k == 0 && words[0] == "<s>";
      std::snprintf(buf, sizeof(buf), "%.17g",
                    is_bos ? kBosLog10Prob : e->log_prob / kLn10);
      out << buf << "\t";
      for (size_t i = 0; i < words.size(); ++i) out << (i ? " " : "") << words[i];
      if (k + 1 < order_) {
        std::snprintf(buf, sizeof(buf), "%.17g", e->log_backoff / kLn10);
        out << "\t" << buf;
      }
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

void NgramLM::save_arpa(const std::filesystem::path& path) const {
  const std::string text = to_arpa();
  io::write_atomic(path, [&](std::ostream& out) { out << text; });
}

NgramLM NgramLM::load_arpa(const std::filesystem::path& path) {
  try {
    return from_arpa(io::read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

NgramLM NgramLM::from_arpa(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_nonempty = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_nonempty() || line != "\\data\\") {
    throw DataError("ARPA: missing \\data\\ header");
  }
  std::vector<size_t> declared;
  while (next_nonempty() && line.rfind("ngram ", 0) == 0) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("ARPA: malformed count line '" + line + "'");
    int k = 0;
    size_t n = 0;
    try {
      k = std::stoi(line.substr(6, eq - 6));
      n = std::stoull(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataError("ARPA: malformed count line '" + line + "'");
    }
    if (k != static_cast<int>(declared.size()) + 1) {
      throw DataError("ARPA: n-gram counts out of order");
    }
    declared.push_back(n);
  }
  if (declared.empty()) throw DataError("ARPA: header declares no n-grams");

  NgramLM lm;
  lm.order_ = static_cast<int>(declared.size());
  lm.grams_.assign(lm.order_, Table{});
  for (const char* r : kReserved) lm.intern(r);

  for (int k = 0; k < lm.order_; ++k) {
    const std::string want = "\\" + std::to_string(k + 1) + "-grams:";
    if (line != want) throw DataError("ARPA: expected '" + want + "', got '" + line + "'");
    size_t rows = 0;
    while (next_nonempty() && line[0] != '\\') {
      std::istringstream fields(line);
      std::string prob_text;
      fields >> prob_text;
      std::vector<std::string> words(k + 1);
      for (auto& w : words) {
        if (!(fields >> w)) throw DataError("ARPA: short n-gram line '" + line + "'");
      }
      std::string bow_text;
      fields >> bow_text;
      Entry e;
      try {
        e.log_prob = std::stod(prob_text) * kLn10;
        if (!bow_text.empty()) e.log_backoff = std::stod(bow_text) * kLn10;
      } catch (const std::exception&) {
        throw DataError("ARPA: bad number in line '" + line + "'");
      }
      std::vector<int> gram;
      for (const auto& w : words) {
        if (k == 0) {
          gram.push_back(lm.intern(w));
        } else {
          auto it = lm.ids_.find(w);
          if (it == lm.ids_.end()) throw DataError("ARPA: token '" + w + "' missing from unigrams");
          gram.push_back(it->second);
        }
      }
      lm.grams_[k][gram] = e;
      ++rows;
    }
    if (rows != declared[k]) {
      throw DataError("ARPA: " + std::to_string(k + 1) + "-gram count mismatch");
    }
  }
  if (line != "\\end\\") throw DataError("ARPA: missing \\end\\");
  if (!lm.lookup(std::vector<int>{kUnk})) throw DataError("ARPA: no <unk> unigram");
  return lm;
}

}  // namespace nerctc
