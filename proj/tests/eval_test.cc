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

#include <cmath>
#include <random>
#include <tuple>

#include <gtest/gtest.h>

#include "nerctc/error.h"

namespace nerctc {
namespace {

Entity ent(Category c, std::string value, size_t b) { return {c, std::move(value), b, b + 1}; }

// (cost, matches, value matches) of an alignment.
using Triple = std::tuple<int, int, int>;

Triple summarize(const std::vector<AlignedPair>& a, const std::vector<Entity>& ref,
                 const std::vector<Entity>& hyp) {
  int cost = 0, matches = 0, values = 0;
  for (const auto& p : a) {
    if (p.op == AlignOp::kDelete || p.op == AlignOp::kInsert) {
      ++cost;
      continue;
    }
    if (ref[p.ref].category == hyp[p.hyp].category) {
      ++matches;
      values += normalize_value(ref[p.ref].value) == normalize_value(hyp[p.hyp].value);
    } else {
      ++cost;
    }
  }
  return {cost, matches, values};
}

// Enumerates every monotone alignment and returns the best objective.
void enumerate(const std::vector<Entity>& ref, const std::vector<Entity>& hyp, size_t i,
               size_t j, Triple acc, Triple& best, bool& any) {
  if (i == ref.size() && j == hyp.size()) {
    auto key = [](const Triple& t) {
      return std::make_tuple(std::get<0>(t), -std::get<1>(t), -std::get<2>(t));
    };
    if (!any || key(acc) < key(best)) best = acc;
    any = true;
    return;
  }
  auto [c, m, v] = acc;
  if (i < ref.size() && j < hyp.size()) {
    const bool same = ref[i].category == hyp[j].category;
    const bool value = same && normalize_value(ref[i].value) == normalize_value(hyp[j].value);
    enumerate(ref, hyp, i + 1, j + 1, {c + !same, m + same, v + value}, best, any);
  }
  if (i < ref.size()) enumerate(ref, hyp, i + 1, j, {c + 1, m, v}, best, any);
  if (j < hyp.size()) enumerate(ref, hyp, i, j + 1, {c + 1, m, v}, best, any);
}

std::vector<Entity> random_entities(std::mt19937_64& rng, int max_n) {
  std::uniform_int_distribution<int> n(0, max_n), cat(0, 2), val(0, 1);
  std::vector<Entity> out(n(rng));
  for (size_t k = 0; k < out.size(); ++k) {
    out[k] = ent(kAllCategories[cat(rng)], val(rng) ? "x" : "y", 2 * k);
  }
  return out;
}

TEST(Align, IdenticalListsAllMatch) {
  const std::vector<Entity> es = {ent(Category::kPers, "a", 0), ent(Category::kLoc, "b", 2)};
  for (const auto& p : align_entities(es, es)) EXPECT_EQ(p.op, AlignOp::kMatch);
}

TEST(Align, SingleDeletion) {
  const auto a = align_entities({ent(Category::kPers, "a", 0)}, {});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].op, AlignOp::kDelete);
}

TEST(Align, PersLocAgainstLoc) {
  const std::vector<Entity> ref = {ent(Category::kPers, "a", 0), ent(Category::kLoc, "b", 1)};
  const std::vector<Entity> hyp = {ent(Category::kLoc, "b", 1)};
  const auto a = align_entities(ref, hyp);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].op, AlignOp::kDelete);
  EXPECT_EQ(a[0].ref, 0);
  EXPECT_EQ(a[1].op, AlignOp::kMatch);
  EXPECT_EQ(a[1].ref, 1);
  EXPECT_EQ(a[1].hyp, 0);
  // The three candidate alignments cost 1 (this one), 2 and 3.
  Triple best;
  bool any = false;
  enumerate(ref, hyp, 0, 0, {0, 0, 0}, best, any);
  EXPECT_EQ(best, (Triple{1, 1, 1}));
}

TEST(Align, OptimalAgainstExhaustiveEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const auto ref = random_entities(rng, 4), hyp = random_entities(rng, 4);
    Triple best;
    bool any = false;
    enumerate(ref, hyp, 0, 0, {0, 0, 0}, best, any);
    EXPECT_EQ(summarize(align_entities(ref, hyp), ref, hyp), best) << "trial " << trial;
  }
}

TEST(Align, RejectsOverlap) {
  std::vector<Entity> bad = {{Category::kLoc, "a", 0, 2}, {Category::kPers, "b", 1, 3}};
  EXPECT_THROW(align_entities(bad, {}), std::invalid_argument);
  std::vector<Entity> unordered = {ent(Category::kLoc, "a", 3), ent(Category::kLoc, "b", 0)};
  EXPECT_THROW(align_entities({}, unordered), std::invalid_argument);
}

TEST(Score, IdentityIsPerfect) {
  const std::vector<ScoredUtterance> ref = {{"u1", "le sculpteur [ césar ] est mort"},
                                            {"u2", "à $ paris ] # hier ]"}};
  const EvalReport r = score(ref, ref, true);
  for (ScoreMode m : {ScoreMode::kCategory, ScoreMode::kCatValue}) {
    EXPECT_EQ(r.mode(m).p(), 1.0);
    EXPECT_EQ(r.mode(m).r(), 1.0);
    EXPECT_EQ(r.mode(m).f(), 1.0);
  }
  EXPECT_EQ(r.value_accuracy(), 1.0);
  EXPECT_EQ(*r.wer, 0.0);
  EXPECT_EQ(*r.cer, 0.0);
}

TEST(Score, HalfRecall) {
  const EvalReport r = score({{"u", "[ césar ] à $ paris ]"}}, {{"u", "césar à $ paris ]"}});
  EXPECT_EQ(r.category.p(), 1.0);
  EXPECT_EQ(r.category.r(), 0.5);
  EXPECT_NEAR(r.category.f(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(r.catvalue.hits, r.category.hits);
  EXPECT_NEAR(r.catvalue.f(), 2.0 / 3.0, 1e-15);
}

TEST(Score, ValueMismatchCountsOnlyInCategoryMode) {
  const EvalReport r = score({{"u", "à $ paris ]"}}, {{"u", "à $ pari ]"}});
  EXPECT_EQ(r.category.hits, 1);
  EXPECT_EQ(r.catvalue.hits, 0);
  EXPECT_EQ(r.value_accuracy(), 0.0);
}

TEST(Score, ValuesAreNormalized) {
  EXPECT_EQ(normalize_value("  New   York "), "new york");
  const EvalReport r = score({{"u", "$ new york ]"}}, {{"u", "$New  York]"}});
  EXPECT_EQ(r.catvalue.hits, 1);
}

TEST(Score, IdMismatchIsAnError) {
  EXPECT_THROW(score({{"a", "x"}}, {{"b", "x"}}), DataError);
  EXPECT_THROW(score({{"a", "x"}}, {{"a", "x"}, {"a", "y"}}), DataError);
  EXPECT_THROW(score({{"a", "x"}}, {{"a", "x"}, {"b", "y"}}), DataError);
}

TEST(Score, SwapExchangesPrecisionAndRecall) {
  const std::vector<ScoredUtterance> a = {{"1", "[ a ] b $ c ] % d ]"}, {"2", "x # y ]"}};
  const std::vector<ScoredUtterance> b = {{"1", "[ a ] $ b ] c"}, {"2", "# y ] { z ]"}};
  const EvalReport ab = score(a, b), ba = score(b, a);
  for (ScoreMode m : {ScoreMode::kCategory, ScoreMode::kCatValue}) {
    EXPECT_EQ(ab.mode(m).p(), ba.mode(m).r());
    EXPECT_EQ(ab.mode(m).r(), ba.mode(m).p());
    EXPECT_EQ(ab.mode(m).f(), ba.mode(m).f());
  }
}

TEST(Score, StarredHypothesesScoreAlike) {
  const std::vector<ScoredUtterance> ref = {{"1", "le [ césar ] est à $ paris ] hier"}};
  const std::string h = "le [ césar ] est $ à paris ] # hier ]";
  const EvalReport plain = score(ref, {{"1", h}});
  const EvalReport starred = score(ref, {{"1", star_transform(h)}});
  EXPECT_EQ(plain.category.hits, starred.category.hits);
  EXPECT_EQ(plain.catvalue.hits, starred.catvalue.hits);
  EXPECT_EQ(plain.category.hyp_total, starred.category.hyp_total);
}

TEST(Score, RandomReportsAreConsistent) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pool = {"a", "b", "[", "$", "%", "]", "]", "c"};
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredUtterance> ref, hyp;
    for (int u = 0; u < 5; ++u) {
      std::string r, h;
      for (int k = 0; k < 8; ++k) {
        r += pool[pick(rng)] + " ";
        h += pool[pick(rng)] + " ";
      }
      ref.push_back({std::to_string(u), r});
      hyp.push_back({std::to_string(u), h});
    }
    const EvalReport rep = score(ref, hyp);
    EXPECT_LE(rep.catvalue.hits, rep.category.hits);
    const Counts& c = rep.category;
    if (c.p() + c.r() > 0) {
      EXPECT_NEAR(c.f(), 2 * c.p() * c.r() / (c.p() + c.r()), 1e-12);
    }
    for (double x : {c.p(), c.r(), c.f()}) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(Measures, ZeroDenominators) {
  EXPECT_EQ(precision(0, 0), 0.0);
  EXPECT_EQ(recall(0, 0), 0.0);
  EXPECT_EQ(f_measure(0.0, 0.0), 0.0);
}

TEST(Measures, PublishedRowsRecomputeWithinRounding) {
  struct Row {
    const char* name;
    double p, r, f;
  };
  const std::vector<Row> rows = {
      {"E2E dev", 0.85, 0.57, 0.68},         {"E2E test", 0.83, 0.52, 0.64},
      {"E2E* dev", 0.75, 0.65, 0.71},        {"E2E* test", 0.82, 0.57, 0.67},
      {"E2E dev value", 0.64, 0.45, 0.53},   {"E2E test value", 0.55, 0.36, 0.44},
      {"E2E* dev value", 0.57, 0.47, 0.52},  {"E2E* test value", 0.47, 0.38, 0.42},
      {"Pip", 0.75, 0.56, 0.64},             {"Pip+POS", 0.74, 0.58, 0.65},
      {"Pip value", 0.58, 0.43, 0.49},       {"Pip+POS value", 0.57, 0.45, 0.50},
      {"E2E+", 0.82, 0.57, 0.67},            {"E2E+*", 0.76, 0.63, 0.69},
      {"E2E+ value", 0.55, 0.40, 0.46},
  };
  for (const Row& row : rows) {
    EXPECT_NEAR(f_measure(row.p, row.r), row.f, 0.015) << row.name;
  }
  EXPECT_EQ(std::round(f_measure(0.83, 0.52) * 100) / 100, 0.64);
  // The printed E2E+* value row (0.49, 0.41, 0.47) is not consistent with
  // its own P and R: even the most favourable unrounded pair gives 0.4515.
  EXPECT_GT(std::abs(f_measure(0.49, 0.41) - 0.47), 0.015);
  EXPECT_LT(f_measure(0.495, 0.415), 0.47 - 0.015);
}

TEST(Rates, Examples) {
  EXPECT_EQ(wer({"a b c"}, {"a b c"}), 0.0);
  EXPECT_NEAR(wer({"a b c"}, {"a c"}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(cer({"abc"}, {"axc"}), 1.0 / 3.0, 1e-15);
  // Summed before dividing, not averaged per utterance.
  EXPECT_NEAR(wer({"a", "b c d"}, {"x", "b c d"}), 1.0 / 4.0, 1e-15);
  EXPECT_EQ(edit_distance(std::u32string_view(U"été"), std::u32string_view(U"ete")), 2);
}

TEST(Rates, ScoreIgnoresMarkersAndStars) {
  const EvalReport r = score({{"u", "à $ paris ]"}}, {{"u", "* $ à paris ]"}}, true);
  EXPECT_EQ(*r.wer, 0.0);
  EXPECT_EQ(*r.cer, 0.0);
}

TEST(Report, JsonAndTable) {
  const EvalReport r = score({{"u", "[ a ] $ b ]"}}, {{"u", "[ a ] b"}});
  const auto j = report_to_json(r, ScoreMode::kCategory);
  EXPECT_EQ(j["mode"], "category");
  EXPECT_DOUBLE_EQ(j["P"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["R"].get<double>(), 0.5);
  const std::string t = format_table({{"E2E", "test", r.category}});
  EXPECT_NE(t.find("System"), std::string::npos);
  EXPECT_NE(t.find("0.67"), std::string::npos);
  EXPECT_EQ(score_mode_from_name("catvalue"), ScoreMode::kCatValue);
  EXPECT_THROW(score_mode_from_name("x"), DataError);
}

}  // namespace
}  // namespace nerctc
