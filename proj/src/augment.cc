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

#include "nerctc/augment.h"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "nerctc/error.h"
#include "nerctc/io.h"
#include "nerctc/parallel.h"
#include "nerctc/utf8.h"

namespace nerctc {

namespace {

void check_phrase(const std::string& where, const std::string& phrase, bool single_token) {
  const auto fail = [&](const std::string& why) {
    throw DataError("rule set: " + where + " entry '" + phrase + "' " + why);
  };
  if (phrase.empty()) fail("is empty");
  const std::vector<std::string> tokens = tokenize(phrase);
  if (tokens.empty()) fail("is empty");
  if (join(tokens) != phrase) fail("must be single-spaced without markers");
  for (char32_t c : utf8::decode(phrase)) {
    if (is_marker(c) || c == kStar) fail("contains a marker character");
  }
  if (utf8::to_lower(phrase) != phrase) fail("must be lowercase");
  if (single_token && tokens.size() != 1) fail("must be a single word");
}

bool contains_at(const std::vector<std::string>& words, size_t at,
                 const std::vector<std::string>& phrase) {
  if (at + phrase.size() > words.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), words.begin() + at);
}

std::vector<std::vector<std::string>> tokenized(const std::vector<std::string>& phrases) {
  std::vector<std::vector<std::string>> out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(tokenize(p));
  return out;
}

}  // namespace

void RuleSet::validate() const {
  for (const auto& [cat, phrases] : gazetteers) {
    for (const auto& p : phrases) {
      check_phrase("gazetteers." + std::string(category_name(cat)), p, false);
    }
  }
  for (const auto& p : number_words) check_phrase("number_words", p, true);
  for (const auto& p : amount_units) check_phrase("amount_units", p, false);
  for (const auto& p : time_words) check_phrase("time_words", p, true);
  std::set<Category> seen;
  for (Category c : priority) {
    if (!seen.insert(c).second) {
      throw DataError("rule set: priority lists '" + std::string(category_name(c)) + "' twice");
    }
  }
}

RuleSet rule_set_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("rule set: must be a JSON object");
  RuleSet r;
  auto category_of = [](const std::string& field, const std::string& name) {
    auto c = category_from_name(name);
    if (!c) throw DataError("rule set: unknown category '" + name + "' in '" + field + "'");
    return *c;
  };
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "gazetteers") {
        for (const auto& [c, g] : v.items()) {
          r.gazetteers[category_of(key, c)] = g.get<std::vector<std::string>>();
        }
      } else if (key == "number_words") {
        r.number_words = v.get<std::vector<std::string>>();
      } else if (key == "amount_units") {
        r.amount_units = v.get<std::vector<std::string>>();
      } else if (key == "time_words") {
        r.time_words = v.get<std::vector<std::string>>();
      } else if (key == "priority") {
        for (const auto& c : v) r.priority.push_back(category_of(key, c.get<std::string>()));
      } else {
        throw DataError("rule set: unknown field '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("rule set: field '" + key + "': " + e.what());
    }
  }
  r.validate();
  return r;
}

nlohmann::json rule_set_to_json(const RuleSet& r) {
  nlohmann::json g = nlohmann::json::object();
  for (const auto& [c, phrases] : r.gazetteers) g[std::string(category_name(c))] = phrases;
  nlohmann::json priority = nlohmann::json::array();
  for (Category c : r.priority) priority.push_back(category_name(c));
  return {{"gazetteers", g},
          {"number_words", r.number_words},
          {"amount_units", r.amount_units},
          {"time_words", r.time_words},
          {"priority", priority}};
}

RuleSet load_rule_set(const std::filesystem::path& path) {
  try {
    return rule_set_from_json(io::read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

RuleSet default_rule_set() {
  const CorpusSpec spec = default_corpus_spec();
  RuleSet r;
  for (const auto& [cat, phrases] : spec.gazetteers) {
    if (cat == Category::kAmount) continue;  // covered by the pattern
    std::vector<std::string>& keep = r.gazetteers[cat];
    for (size_t i = 0; i < phrases.size(); ++i) {
      if (i % 4 != 3) keep.push_back(phrases[i]);
    }
  }
  r.number_words = {"un",     "deux",   "trois",    "quatre",  "cinq",  "six",
                    "sept",   "huit",   "neuf",     "dix",     "onze",  "douze",
                    "vingt",  "trente", "quarante", "soixante", "cent", "cents",
                    "mille"};
  r.amount_units = {"ans", "euros", "pour cent", "personnes", "kilomètres"};
  r.time_words = {"lundi",   "mardi",   "mercredi", "jeudi",    "vendredi", "samedi",
                  "dimanche", "janvier", "février",  "mars",     "avril",    "mai",
                  "juin",    "juillet", "août",     "septembre", "octobre", "novembre",
                  "décembre"};
  r.priority = {kAllCategories.begin(), kAllCategories.end()};
  return r;
}

std::vector<RuleMatch> find_matches(const std::vector<std::string>& words,
                                    const RuleSet& rules) {
  std::vector<RuleMatch> out;
  const std::set<std::string> numbers(rules.number_words.begin(), rules.number_words.end());
  const std::set<std::string> times(rules.time_words.begin(), rules.time_words.end());
  const auto units = tokenized(rules.amount_units);
  std::vector<std::pair<Category, std::vector<std::vector<std::string>>>> gaz;
  for (const auto& [cat, phrases] : rules.gazetteers) gaz.emplace_back(cat, tokenized(phrases));

  for (size_t i = 0; i < words.size(); ++i) {
    for (const auto& [cat, phrases] : gaz) {
      for (const auto& p : phrases) {
        if (contains_at(words, i, p)) out.push_back({cat, i, i + p.size()});
      }
    }
    size_t j = i;
    while (j < words.size() && numbers.count(words[j])) ++j;
    if (j > i) {
      for (const auto& u : units) {
        if (contains_at(words, j, u)) out.push_back({Category::kAmount, i, j + u.size()});
      }
    }
    if (j < words.size() && times.count(words[j])) out.push_back({Category::kTime, i, j + 1});
  }
  return out;
}

TaggedTranscript annotate(std::string_view plain, const RuleSet& rules) {
  for (char32_t c : utf8::decode(plain)) {
    if (is_marker(c) || c == kStar) {
      throw std::invalid_argument("annotate: input already contains marker characters");
    }
  }
  const std::vector<std::string> words = tokenize(plain);
  std::vector<RuleMatch> cands = find_matches(words, rules);

  // Drop candidates strictly inside another candidate.
  std::vector<RuleMatch> maximal;
  for (const auto& c : cands) {
    const bool dominated = std::any_of(cands.begin(), cands.end(), [&](const RuleMatch& o) {
      return o.begin <= c.begin && c.end <= o.end && (o.end - o.begin) > (c.end - c.begin);
    });
    if (!dominated) maximal.push_back(c);
  }

  std::vector<int> rank(kAllCategories.size(), static_cast<int>(rules.priority.size()));
  for (size_t k = 0; k < rules.priority.size(); ++k) {
    rank[static_cast<size_t>(rules.priority[k])] = static_cast<int>(k);
  }
  std::sort(maximal.begin(), maximal.end(), [&](const RuleMatch& a, const RuleMatch& b) {
    const size_t la = a.end - a.begin, lb = b.end - b.begin;
    const int ra = rank[static_cast<size_t>(a.category)], rb = rank[static_cast<size_t>(b.category)];
    return std::make_tuple(-static_cast<long>(la), a.begin, ra, static_cast<int>(a.category)) <
           std::make_tuple(-static_cast<long>(lb), b.begin, rb, static_cast<int>(b.category));
  });

  std::vector<bool> taken(words.size(), false);
  std::vector<Entity> entities;
  for (const auto& m : maximal) {
    if (std::any_of(taken.begin() + m.begin, taken.begin() + m.end, [](bool b) { return b; })) {
      continue;
    }
    std::fill(taken.begin() + m.begin, taken.begin() + m.end, true);
    Entity e;
    e.category = m.category;
    e.begin = m.begin;
    e.end = m.end;
    e.value = join(std::span(words).subspan(m.begin, m.end - m.begin));
    entities.push_back(std::move(e));
  }
  std::sort(entities.begin(), entities.end(),
            [](const Entity& a, const Entity& b) { return a.begin < b.begin; });
  return encode(words, entities);
}

std::vector<Utterance> augment_corpus(const std::vector<Utterance>& corpus,
                                      const RuleSet& rules, int threads) {
  rules.validate();
  std::vector<Utterance> out(corpus.size());
  parallel_for(corpus.size(), threads, [&](size_t k) {
    const Utterance& u = corpus[k];
    if (u.source == "augmented") {
      throw DataError("utterance '" + u.id + "': already augmented");
    }
    Utterance a = u;
    try {
      a.tagged = annotate(u.plain, rules).str();
    } catch (const std::invalid_argument& e) {
      throw DataError("utterance '" + u.id + "': " + e.what());
    }
    a.source = "augmented";
    out[k] = std::move(a);
  });
  return out;
}

std::vector<Utterance> mix_manifests(const std::vector<Utterance>& gold,
                                     const std::vector<Utterance>& augmented) {
  std::vector<Utterance> out = gold;
  out.insert(out.end(), augmented.begin(), augmented.end());
  std::set<std::string> ids;
  for (const auto& u : out) {
    if (!ids.insert(u.id).second) throw DataError("duplicate utterance id '" + u.id + "'");
  }
  return out;
}

}  // namespace nerctc
