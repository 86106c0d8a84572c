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

#include "nerctc/eval.h"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "nerctc/error.h"
#include "nerctc/parallel.h"
#include "nerctc/utf8.h"

namespace nerctc {

namespace {

void check_ordered(const std::vector<Entity>& es, const char* which) {
  for (size_t k = 0; k < es.size(); ++k) {
    if (es[k].begin >= es[k].end) {
      throw std::invalid_argument(std::string(which) + " entity " + std::to_string(k) +
                                  " has an empty span");
    }
    if (k > 0 && es[k].begin < es[k - 1].end) {
      throw std::invalid_argument(std::string(which) + " entities are unordered or overlap");
    }
  }
}

// Lexicographic objective: lower cost, then more matches, then more value
// matches.
struct Score {
  int cost = 0;
  int matches = 0;
  int value_matches = 0;

  bool better_than(const Score& o) const {
    return std::tie(cost, o.matches, o.value_matches) <
           std::tie(o.cost, matches, value_matches);
  }
  bool operator==(const Score&) const = default;
};

std::vector<std::string> rate_words(const std::string& tagged) {
  std::vector<std::string> out;
  for (auto& w : tokenize(strip_markers(tagged))) {
    if (w != "*") out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

std::vector<AlignedPair> align_entities(const std::vector<Entity>& ref,
                                        const std::vector<Entity>& hyp) {
  check_ordered(ref, "reference");
  check_ordered(hyp, "hypothesis");
  const size_t n = ref.size(), m = hyp.size();
  std::vector<std::string> ref_values, hyp_values;
  for (const auto& e : ref) ref_values.push_back(normalize_value(e.value));
  for (const auto& e : hyp) hyp_values.push_back(normalize_value(e.value));

  // best[i][j]: optimal score for ref[i:] against hyp[j:]. Solving suffixes
  // lets the forward walk prefer the earliest operations.
  std::vector<std::vector<Score>> best(n + 1, std::vector<Score>(m + 1));
  auto diag = [&](size_t i, size_t j) {
    Score s = best[i + 1][j + 1];
    if (ref[i].category == hyp[j].category) {
      ++s.matches;
      if (ref_values[i] == hyp_values[j]) ++s.value_matches;
    } else {
      ++s.cost;
    }
    return s;
  };
  for (size_t i = n + 1; i-- > 0;) {
    for (size_t j = m + 1; j-- > 0;) {
      if (i == n && j == m) continue;
      std::optional<Score> s;
      auto offer = [&](Score c) {
        if (!s || c.better_than(*s)) s = c;
      };
      if (i < n && j < m) offer(diag(i, j));
      if (i < n) {
        Score c = best[i + 1][j];
        ++c.cost;
        offer(c);
      }
      if (j < m) {
        Score c = best[i][j + 1];
        ++c.cost;
        offer(c);
      }
      best[i][j] = *s;
    }
  }

  std::vector<AlignedPair> out;
  size_t i = 0, j = 0;
  while (i < n || j < m) {
    const Score& want = best[i][j];
    if (i < n && j < m && diag(i, j) == want) {
      const AlignOp op =
          ref[i].category == hyp[j].category ? AlignOp::kMatch : AlignOp::kSubstitute;
      out.push_back({op, static_cast<int>(i), static_cast<int>(j)});
      ++i;
      ++j;
      continue;
    }
    if (i < n) {
      Score c = best[i + 1][j];
      ++c.cost;
      if (c == want) {
        out.push_back({AlignOp::kDelete, static_cast<int>(i), -1});
        ++i;
        continue;
      }
    }
    out.push_back({AlignOp::kInsert, -1, static_cast<int>(j)});
    ++j;
  }
  return out;
}

std::string normalize_value(std::string_view value) {
  return join(tokenize(utf8::to_lower(value)));
}

std::string_view score_mode_name(ScoreMode m) {
  return m == ScoreMode::kCategory ? "category" : "catvalue";
}

ScoreMode score_mode_from_name(std::string_view name) {
  if (name == "category") return ScoreMode::kCategory;
  if (name == "catvalue") return ScoreMode::kCatValue;
  throw DataError("unknown score mode '" + std::string(name) + "'");
}

double precision(long hits, long hyp_total) {
  return hyp_total == 0 ? 0.0 : static_cast<double>(hits) / hyp_total;
}

double recall(long hits, long ref_total) {
  return ref_total == 0 ? 0.0 : static_cast<double>(hits) / ref_total;
}

double f_measure(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

EvalReport score(const std::vector<ScoredUtterance>& ref,
                 const std::vector<ScoredUtterance>& hyp, bool with_rates, int threads) {
  std::unordered_map<std::string, size_t> hyp_index;
  for (size_t k = 0; k < hyp.size(); ++k) {
    if (!hyp_index.emplace(hyp[k].id, k).second) {
      throw DataError("duplicate hypothesis id '" + hyp[k].id + "'");
    }
  }
  std::vector<size_t> pairing(ref.size());
  {
    std::unordered_map<std::string, bool> seen;
    for (size_t k = 0; k < ref.size(); ++k) {
      auto it = hyp_index.find(ref[k].id);
      if (it == hyp_index.end()) throw DataError("reference id '" + ref[k].id + "' has no hypothesis");
      if (!seen.emplace(ref[k].id, true).second) {
        throw DataError("duplicate reference id '" + ref[k].id + "'");
      }
      pairing[k] = it->second;
    }
    if (ref.size() != hyp.size()) {
      for (const auto& h : hyp) {
        if (!seen.count(h.id)) throw DataError("hypothesis id '" + h.id + "' has no reference");
      }
    }
  }

  struct Partial {
    EvalReport report;
    long word_edits = 0, words = 0, char_edits = 0, chars = 0;
  };
  std::vector<Partial> parts(ref.size());
  parallel_for(ref.size(), threads, [&](size_t k) {
    Partial& part = parts[k];
    EvalReport& r = part.report;
    const ScoredUtterance& h = hyp[pairing[k]];
    const ParsedTranscript pr = parse(ref[k].tagged, ParsePolicy::kRepair);
    const ParsedTranscript ph = parse(h.tagged, ParsePolicy::kRepair);
    r.category.ref_total = r.catvalue.ref_total = static_cast<long>(pr.entities.size());
    r.category.hyp_total = r.catvalue.hyp_total = static_cast<long>(ph.entities.size());
    for (const auto& e : pr.entities) ++r.per_category[e.category].ref_total;
    for (const auto& e : ph.entities) ++r.per_category[e.category].hyp_total;
    for (const auto& a : align_entities(pr.entities, ph.entities)) {
      if (a.op != AlignOp::kMatch) continue;
      const Entity& re = pr.entities[a.ref];
      ++r.category.hits;
      ++r.per_category[re.category].hits;
      if (normalize_value(re.value) == normalize_value(ph.entities[a.hyp].value)) {
        ++r.catvalue.hits;
      }
    }
    if (with_rates) {
      const auto rw = rate_words(ref[k].tagged), hw = rate_words(h.tagged);
      part.word_edits = edit_distance(rw, hw);
      part.words = static_cast<long>(rw.size());
      const std::u32string rc = utf8::decode(join(rw)), hc = utf8::decode(join(hw));
      part.char_edits = edit_distance(rc, hc);
      part.chars = static_cast<long>(rc.size());
    }
  });

  EvalReport total;
  long word_edits = 0, words = 0, char_edits = 0, chars = 0;
  auto add = [](Counts& a, const Counts& b) {
    a.hits += b.hits;
    a.hyp_total += b.hyp_total;
    a.ref_total += b.ref_total;
  };
  for (const Partial& p : parts) {
    add(total.category, p.report.category);
    add(total.catvalue, p.report.catvalue);
    for (const auto& [c, counts] : p.report.per_category) add(total.per_category[c], counts);
    word_edits += p.word_edits;
    words += p.words;
    char_edits += p.char_edits;
    chars += p.chars;
  }
  if (with_rates) {
    total.wer = words == 0 ? 0.0 : static_cast<double>(word_edits) / words;
    total.cer = chars == 0 ? 0.0 : static_cast<double>(char_edits) / chars;
  }
  return total;
}

namespace {

template <typename Seq>
long levenshtein(const Seq& a, const Seq& b) {
  std::vector<long> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<long>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    long diag = row[0];
    row[0] = static_cast<long>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const long up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

void check_parallel(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.size() != hyp.size()) {
    throw std::invalid_argument("reference and hypothesis lists differ in length");
  }
}

}  // namespace

long edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return levenshtein(a, b);
}

long edit_distance(std::u32string_view a, std::u32string_view b) { return levenshtein(a, b); }

double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  check_parallel(ref, hyp);
  long edits = 0, n = 0;
  for (size_t k = 0; k < ref.size(); ++k) {
    const auto rw = tokenize(ref[k]), hw = tokenize(hyp[k]);
    edits += edit_distance(rw, hw);
    n += static_cast<long>(rw.size());
  }
  return n == 0 ? (edits == 0 ? 0.0 : 1.0) : static_cast<double>(edits) / n;
}

double cer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  check_parallel(ref, hyp);
  long edits = 0, n = 0;
  for (size_t k = 0; k < ref.size(); ++k) {
    const std::u32string rc = utf8::decode(ref[k]), hc = utf8::decode(hyp[k]);
    edits += edit_distance(rc, hc);
    n += static_cast<long>(rc.size());
  }
  return n == 0 ? (edits == 0 ? 0.0 : 1.0) : static_cast<double>(edits) / n;
}

nlohmann::json report_to_json(const EvalReport& report, ScoreMode mode) {
  auto counts = [](const Counts& c) {
    return nlohmann::json{{"hits", c.hits}, {"hyp_total", c.hyp_total},
                          {"ref_total", c.ref_total}, {"P", c.p()},
                          {"R", c.r()},       {"F", c.f()}};
  };
  const Counts& m = report.mode(mode);
  nlohmann::json j = {
      {"mode", score_mode_name(mode)},
      {"P", m.p()},
      {"R", m.r()},
      {"F", m.f()},
      {"category", counts(report.category)},
      {"catvalue", counts(report.catvalue)},
      {"value_accuracy", report.value_accuracy()},
  };
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, cc] : report.per_category) per[std::string(category_name(c))] = counts(cc);
  j["per_category"] = per;
  if (report.wer) j["wer"] = *report.wer;
  if (report.cer) j["cer"] = *report.cer;
  return j;
}

std::string format_table(const std::vector<TableRow>& rows) {
  size_t sys_w = 6, corpus_w = 6;
  for (const auto& r : rows) {
    sys_w = std::max(sys_w, r.system.size());
    corpus_w = std::max(corpus_w, r.corpus.size());
  }
  std::ostringstream out;
  char buf[64];
  auto cell = [&](const std::string& s, size_t w) {
    out << s << std::string(w - s.size() + 2, ' ');
  };
  cell("System", sys_w);
  cell("Corpus", corpus_w);
  out << "P     R     F\n";
  for (const auto& r : rows) {
    cell(r.system, sys_w);
    cell(r.corpus, corpus_w);
    std::snprintf(buf, sizeof(buf), "%.2f  %.2f  %.2f", r.counts.p(), r.counts.r(), r.counts.f());
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace nerctc
