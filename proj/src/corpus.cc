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

#include "nerctc/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/io.h"
#include "nerctc/utf8.h"

namespace nerctc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFeatureMagic[4] = {'N', 'C', 'F', 'T'};
constexpr uint32_t kFeatureVersion = 1;

constexpr uint64_t kPrototypeStream = 0x70726f746f;  // "proto"
constexpr uint64_t kQuotaStream = 0x71756f7461;      // "quota"

std::vector<std::string> to_strings(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

std::vector<std::string> amount_phrases() {
  const std::vector<std::string> numbers = {
      "deux",          "trois",           "cinq",      "sept",
      "dix",           "douze",           "vingt",     "trente",
      "quarante deux", "soixante dix sept", "cent",   "deux cents",
      "mille",         "trois mille"};
  const std::vector<std::string> units = {"ans",      "euros",     "pour cent",
                                          "personnes", "kilomètres", "mètres"};
  std::vector<std::string> out;
  for (const auto& n : numbers) {
    for (const auto& u : units) out.push_back(n + " " + u);
  }
  return out;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(name) + "'");
}

std::map<Category, double> reference_category_weights() {
  return {{Category::kPers, 22115}, {Category::kFunc, 6628},
          {Category::kOrg, 15804},  {Category::kLoc, 18159},
          {Category::kProd, 2317},  {Category::kTime, 12020},
          {Category::kAmount, 5959}, {Category::kEvent, 321}};
}

CorpusSpec default_corpus_spec() {
  CorpusSpec s;
  s.category_weights = reference_category_weights();
  s.gazetteers[Category::kPers] = to_strings(
      {"césar", "jean dupont", "marie curie", "victor hugo", "jacques chirac",
       "ségolène royal", "zinedine zidane", "édith piaf", "charles de gaulle",
       "simone veil", "albert camus", "louis pasteur", "pierre martin",
       "sophie dubois", "catherine deneuve", "gérard depardieu"});
  s.gazetteers[Category::kFunc] = to_strings(
      {"président", "ministre", "maire", "premier ministre",
       "directeur général", "porte parole", "député", "sénateur", "préfet",
       "ambassadeur", "juge", "secrétaire d état"});
  s.gazetteers[Category::kOrg] = to_strings(
      {"onu", "union européenne", "sncf", "renault", "air france",
       "parti socialiste", "assemblée nationale", "radio france", "otan",
       "croix rouge", "banque de france", "paris saint germain",
       "olympique de marseille", "france télévisions"});
  s.gazetteers[Category::kLoc] = to_strings(
      {"paris", "marseille", "lyon", "toulouse", "bordeaux", "lille", "nice",
       "nantes", "strasbourg", "france", "allemagne", "espagne", "italie",
       "europe", "afrique", "new york", "londres", "bruxelles", "bretagne"});
  s.gazetteers[Category::kProd] = to_strings(
      {"le petit prince", "les misérables", "la joconde", "le figaro",
       "libération", "télérama", "la marseillaise", "astérix",
       "journal de vingt heures", "le canard enchaîné"});
  s.gazetteers[Category::kAmount] = amount_phrases();
  s.gazetteers[Category::kTime] = to_strings(
      {"hier", "demain", "aujourd hui", "ce matin", "ce soir", "lundi",
       "mardi", "mercredi", "jeudi", "vendredi", "samedi", "dimanche",
       "en janvier", "le douze mars", "la semaine prochaine", "cette nuit",
       "l an dernier", "en deux mille dix"});
  s.gazetteers[Category::kEvent] = to_strings(
      {"la coupe du monde", "les jeux olympiques", "le festival de cannes",
       "le tour de france", "la seconde guerre mondiale", "mai soixante huit"});

  s.templates[Category::kPers] = {{"le sculpteur", "est mort"},
                                  {"selon", ""},
                                  {"", "a déclaré"},
                                  {"nous avons rencontré", ""},
                                  {"le discours de", ""},
                                  {"avec", ""}};
  s.templates[Category::kFunc] = {{"le", "a annoncé"},
                                  {"il a été nommé", ""},
                                  {"en tant que", ""},
                                  {"le nouveau", "de la région"}};
  s.templates[Category::kOrg] = {{"", "a publié un communiqué"},
                                 {"les salariés de", ""},
                                 {"selon", ""},
                                 {"avec", ""}};
  s.templates[Category::kLoc] = {{"à", ""},
                                 {"il habite à", ""},
                                 {"en direction de", ""},
                                 {"depuis", ""},
                                 {"les habitants de", ""}};
  s.templates[Category::kProd] = {{"il lit", ""},
                                  {"le succès de", ""},
                                  {"", "est sorti"},
                                  {"la critique de", ""}};
  s.templates[Category::kAmount] = {{"à l âge de", ""},
                                    {"il a payé", ""},
                                    {"une hausse de", ""},
                                    {"environ", ""}};
  s.templates[Category::kTime] = {{"", ""},
                                  {"il est parti", ""},
                                  {"", "il pleuvait"},
                                  {"depuis", ""}};
  s.templates[Category::kEvent] = {{"pendant", ""},
                                   {"", "commence"},
                                   {"les images de", ""}};
  s.fillers = to_strings({"il fait beau", "nous allons voir", "bonsoir",
                          "et puis", "voilà", "mais aussi", "merci beaucoup",
                          "on en parle", "la suite"});
  return s;
}

void CorpusSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw DataError("corpus spec: field '" + field + "' " + why);
  };
  if (feature_dim < 1) fail("feature_dim", "must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise", "must be >= 0");
  if (min_duration < 1 || max_duration < min_duration) {
    fail("min_duration/max_duration", "must satisfy 1 <= min <= max");
  }
  if (min_entities < 0 || max_entities < min_entities) {
    fail("min_entities/max_entities", "must satisfy 0 <= min <= max");
  }
  if (!(filler_probability >= 0.0 && filler_probability <= 1.0)) {
    fail("filler_probability", "must be in [0, 1]");
  }
  for (const auto& [split, n] : counts) {
    if (n < 0) fail("counts." + std::string(split_name(split)), "must be >= 0");
  }
  Alphabet base;
  try {
    base = Alphabet::build(base_chars, false, false);
  } catch (const std::invalid_argument& e) {
    fail("base_chars", e.what());
  }
  double total = 0.0;
  for (const auto& [cat, w] : category_weights) {
    const std::string field =
        "category_weights." + std::string(category_name(cat));
    if (!(w >= 0.0) || !std::isfinite(w)) fail(field, "must be >= 0");
    total += w;
    if (w == 0.0) continue;
    auto g = gazetteers.find(cat);
    if (g == gazetteers.end() || g->second.empty()) {
      fail("gazetteers." + std::string(category_name(cat)),
           "is empty for a weighted category");
    }
    auto t = templates.find(cat);
    if (t == templates.end() || t->second.empty()) {
      fail("templates." + std::string(category_name(cat)),
           "is empty for a weighted category");
    }
  }
  if (min_entities == 0 && fillers.empty()) {
    fail("fillers", "must be non-empty when utterances may lack entities");
  }
  if (max_entities > 0 && total <= 0.0) {
    fail("category_weights", "must contain a positive weight");
  }
  auto check_text = [&](const std::string& field, const std::string& text,
                        bool allow_empty) {
    if (!allow_empty && tokenize(text).empty()) fail(field, "holds an empty phrase");
    if (join(tokenize(text)) != text) {
      fail(field, "phrase '" + text + "' is not single-space separated");
    }
    try {
      base.to_ids(text);
    } catch (const std::invalid_argument& e) {
      fail(field, "phrase '" + text + "': " + e.what());
    }
  };
  for (const auto& [cat, phrases] : gazetteers) {
    for (const auto& p : phrases) {
      check_text("gazetteers." + std::string(category_name(cat)), p, false);
    }
  }
  for (const auto& [cat, ts] : templates) {
    for (const auto& t : ts) {
      check_text("templates." + std::string(category_name(cat)), t.before, true);
      check_text("templates." + std::string(category_name(cat)), t.after, true);
    }
  }
  for (const auto& f : fillers) check_text("fillers", f, false);
}

json corpus_spec_to_json(const CorpusSpec& s) {
  json j;
  j["seed"] = s.seed;
  for (const auto& [split, n] : s.counts) j["counts"][split_name(split)] = n;
  j["feature_dim"] = s.feature_dim;
  j["noise"] = s.noise;
  j["min_duration"] = s.min_duration;
  j["max_duration"] = s.max_duration;
  j["base_chars"] = utf8::encode(s.base_chars);
  j["category_weights"] = json::object();
  for (const auto& [c, w] : s.category_weights) {
    j["category_weights"][category_name(c)] = w;
  }
  for (const auto& [c, g] : s.gazetteers) j["gazetteers"][category_name(c)] = g;
  for (const auto& [c, ts] : s.templates) {
    json arr = json::array();
    for (const auto& t : ts) arr.push_back(json::array({t.before, t.after}));
    j["templates"][category_name(c)] = arr;
  }
  j["fillers"] = s.fillers;
  j["min_entities"] = s.min_entities;
  j["max_entities"] = s.max_entities;
  j["filler_probability"] = s.filler_probability;
  return j;
}

CorpusSpec corpus_spec_from_json(const json& doc) {
  CorpusSpec s = default_corpus_spec();
  if (!doc.is_object()) throw DataError("corpus spec: must be a JSON object");
  auto category_of = [](const std::string& field, const std::string& name) {
    auto c = category_from_name(name);
    if (!c) throw DataError("corpus spec: unknown category '" + name + "' in '" + field + "'");
    return *c;
  };
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "seed") {
        s.seed = v.get<uint64_t>();
      } else if (key == "counts") {
        for (const auto& [split, n] : v.items()) {
          s.counts[split_from_name(split)] = n.get<int>();
        }
      } else if (key == "feature_dim") {
        s.feature_dim = v.get<int>();
      } else if (key == "noise") {
        s.noise = v.get<double>();
      } else if (key == "min_duration") {
        s.min_duration = v.get<int>();
      } else if (key == "max_duration") {
        s.max_duration = v.get<int>();
      } else if (key == "base_chars") {
        s.base_chars = utf8::decode(v.get<std::string>());
      } else if (key == "category_weights") {
        s.category_weights.clear();
        for (const auto& [c, w] : v.items()) {
          s.category_weights[category_of(key, c)] = w.get<double>();
        }
      } else if (key == "gazetteers") {
        for (const auto& [c, g] : v.items()) {
          s.gazetteers[category_of(key, c)] = g.get<std::vector<std::string>>();
        }
      } else if (key == "templates") {
        for (const auto& [c, ts] : v.items()) {
          std::vector<SlotTemplate> out;
          for (const auto& t : ts) {
            if (!t.is_array() || t.size() != 2) {
              throw DataError("corpus spec: templates entries are [before, after] pairs");
            }
            out.push_back({t[0].get<std::string>(), t[1].get<std::string>()});
          }
          s.templates[category_of(key, c)] = std::move(out);
        }
      } else if (key == "fillers") {
        s.fillers = v.get<std::vector<std::string>>();
      } else if (key == "min_entities") {
        s.min_entities = v.get<int>();
      } else if (key == "max_entities") {
        s.max_entities = v.get<int>();
      } else if (key == "filler_probability") {
        s.filler_probability = v.get<double>();
      } else {
        throw DataError("corpus spec: unknown field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

uint64_t derive_seed(uint64_t master, uint64_t index) {
  uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Largest-remainder allocation of `n` slots over the weighted categories,
// shuffled, so realized frequencies track the weights even for rare classes.
std::vector<Category> allocate_categories(const CorpusSpec& spec, size_t n,
                                          uint64_t seed) {
  std::vector<std::pair<Category, double>> weighted;
  double total = 0.0;
  for (const auto& [c, w] : spec.category_weights) {
    if (w > 0.0) {
      weighted.emplace_back(c, w);
      total += w;
    }
  }
  std::vector<size_t> quota(weighted.size());
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < weighted.size(); ++i) {
    const double exact = n * weighted[i].second / total;
    quota[i] = static_cast<size_t>(std::floor(exact));
    assigned += quota[i];
    remainders.emplace_back(exact - quota[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) {
    ++quota[remainders[k % remainders.size()].second];
  }
  std::vector<Category> out;
  out.reserve(n);
  for (size_t i = 0; i < weighted.size(); ++i) {
    out.insert(out.end(), quota[i], weighted[i].first);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& xs, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> d(0, xs.size() - 1);
  return xs[d(rng)];
}

void append_words(std::vector<std::string>& words, const std::string& text) {
  for (auto& w : tokenize(text)) words.push_back(std::move(w));
}

}  // namespace

GeneratedCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  GeneratedCorpus out;
  uint64_t global_index = 0;
  for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
    auto it = spec.counts.find(split);
    const int count = it == spec.counts.end() ? 0 : it->second;
    // First pass: entity counts per utterance.
    std::vector<int> k(count);
    size_t total_entities = 0;
    for (int u = 0; u < count; ++u) {
      std::mt19937_64 rng(derive_seed(spec.seed, global_index + u));
      std::uniform_int_distribution<int> d(spec.min_entities, spec.max_entities);
      k[u] = d(rng);
      total_entities += k[u];
    }
    const std::vector<Category> cats = allocate_categories(
        spec, total_entities,
        derive_seed(spec.seed ^ kQuotaStream, static_cast<uint64_t>(split)));
    size_t next_cat = 0;
    for (int u = 0; u < count; ++u, ++global_index) {
      std::mt19937_64 rng(derive_seed(spec.seed, global_index));
      // Replay the entity-count draw so the stream matches the first pass.
      std::uniform_int_distribution<int>(spec.min_entities, spec.max_entities)(rng);
      std::bernoulli_distribution filler(spec.filler_probability);
      std::vector<std::string> words;
      std::vector<Entity> entities;
      if (!spec.fillers.empty() && filler(rng)) {
        append_words(words, pick(spec.fillers, rng));
      }
      for (int e = 0; e < k[u]; ++e) {
        const Category cat = cats[next_cat++];
        const SlotTemplate& t = pick(spec.templates.at(cat), rng);
        const std::string& value = pick(spec.gazetteers.at(cat), rng);
        append_words(words, t.before);
        Entity ent;
        ent.category = cat;
        ent.value = value;
        ent.begin = words.size();
        append_words(words, value);
        ent.end = words.size();
        entities.push_back(ent);
        append_words(words, t.after);
      }
      if (!spec.fillers.empty() && filler(rng)) {
        append_words(words, pick(spec.fillers, rng));
      }
      if (words.empty()) append_words(words, pick(spec.fillers, rng));

      Utterance utt;
      char id[32];
      std::snprintf(id, sizeof(id), "%s_%05d",
                    std::string(split_name(split)).c_str(), u);
      utt.id = id;
      utt.split = split;
      utt.plain = join(words);
      utt.tagged = encode(words, entities).str();
      utt.features = synthesize_features(utf8::decode(utt.plain), spec,
                                         derive_seed(derive_seed(spec.seed, global_index), 1));
      out.utterances.push_back(std::move(utt));
      out.entities.push_back(std::move(entities));
    }
  }
  return out;
}

std::map<char32_t, Eigen::VectorXf> character_prototypes(const CorpusSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, kPrototypeStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::map<char32_t, Eigen::VectorXf> protos;
  for (char32_t c : spec.base_chars) {
    Eigen::VectorXf v(spec.feature_dim);
    for (int i = 0; i < spec.feature_dim; ++i) v[i] = static_cast<float>(normal(rng));
    protos[c] = v;
  }
  return protos;
}

FeatureMatrix synthesize_features(std::u32string_view chars,
                                  const CorpusSpec& spec, uint64_t seed) {
  // Prototypes depend only on the master seed; cache the last table.
  thread_local std::pair<std::string, std::map<char32_t, Eigen::VectorXf>> cache;
  const std::string key = std::to_string(spec.seed) + "/" +
                          std::to_string(spec.feature_dim) + "/" +
                          utf8::encode(spec.base_chars);
  if (cache.first != key) cache = {key, character_prototypes(spec)};
  const auto& protos = cache.second;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> duration(spec.min_duration, spec.max_duration);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<int> durations;
  durations.reserve(chars.size());
  size_t total = 0;
  for (char32_t c : chars) {
    if (is_marker(c) || c == kStar) {
      throw std::invalid_argument("character '" + utf8::encode(c) +
                                  "' has no acoustic realization");
    }
    if (!protos.count(c)) {
      throw std::invalid_argument("character '" + utf8::encode(c) +
                                  "' is not in the base alphabet");
    }
    durations.push_back(duration(rng));
    total += durations.back();
  }
  FeatureMatrix out(total, spec.feature_dim);
  size_t row = 0;
  for (size_t i = 0; i < chars.size(); ++i) {
    const Eigen::VectorXf& p = protos.at(chars[i]);
    for (int d = 0; d < durations[i]; ++d, ++row) {
      for (int f = 0; f < spec.feature_dim; ++f) {
        out(row, f) = spec.noise == 0.0
                          ? p[f]
                          : static_cast<float>(p[f] + spec.noise * noise(rng));
      }
    }
  }
  return out;
}

FeatureMatrix perturb(const FeatureMatrix& features, Range gain, Range tempo,
                      uint64_t seed) {
  if (features.rows() == 0) throw std::invalid_argument("empty feature sequence");
  if (!(tempo.lo > 0.0) || tempo.hi < tempo.lo || gain.hi < gain.lo) {
    throw std::invalid_argument("invalid perturbation ranges");
  }
  std::mt19937_64 rng(seed);
  auto draw = [&rng](Range r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  const auto g = static_cast<float>(draw(gain));
  const double rate = draw(tempo);
  const Eigen::Index t_in = features.rows();
  const Eigen::Index t_out =
      std::max<Eigen::Index>(1, std::llround(static_cast<double>(t_in) / rate));
  FeatureMatrix out(t_out, features.cols());
  for (Eigen::Index j = 0; j < t_out; ++j) {
    const double pos = std::min(static_cast<double>(t_in - 1), j * rate);
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    const auto w = static_cast<float>(pos - i0);
    if (w == 0.0f || i0 + 1 >= t_in) {
      out.row(j) = features.row(i0);
    } else {
      out.row(j) = (1.0f - w) * features.row(i0) + w * features.row(i0 + 1);
    }
  }
  if (g != 0.0f) out.array() += g;
  return out;
}

void write_features(const fs::path& path, const FeatureMatrix& features) {
  io::write_atomic(
      path,
      [&](std::ostream& out) {
        out.write(kFeatureMagic, 4);
        io::write_le<uint32_t>(out, kFeatureVersion);
        io::write_le<uint32_t>(out, static_cast<uint32_t>(features.rows()));
        io::write_le<uint32_t>(out, static_cast<uint32_t>(features.cols()));
        for (Eigen::Index i = 0; i < features.size(); ++i) {
          io::write_le<float>(out, features.data()[i]);
        }
      },
      /*binary=*/true);
}

FeatureMatrix read_features(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kFeatureMagic)) {
    throw DataError("bad feature file magic in " + path.string());
  }
  uint32_t version = 0, rows = 0, cols = 0;
  if (!io::read_le(in, &version) || !io::read_le(in, &rows) ||
      !io::read_le(in, &cols)) {
    throw DataError("truncated feature header in " + path.string());
  }
  if (version != kFeatureVersion) {
    throw DataError("unsupported feature file version " +
                    std::to_string(version) + " in " + path.string());
  }
  const auto begin = in.tellg();
  in.seekg(0, std::ios::end);
  const auto payload = static_cast<uint64_t>(in.tellg() - begin);
  in.seekg(begin);
  const uint64_t expected = uint64_t{rows} * cols * sizeof(float);
  if (payload != expected) {
    throw DataError("feature payload is " + std::to_string(payload) +
                    " bytes, header T*F implies " + std::to_string(expected) +
                    " in " + path.string());
  }
  FeatureMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) io::read_le(in, out.data() + i);
  return out;
}

json utterance_record(const Utterance& u, const fs::path& manifest_dir) {
  json r;
  r["id"] = u.id;
  fs::path p = u.features_path;
  if (p.is_absolute() && !manifest_dir.empty()) {
    p = fs::relative(p, fs::absolute(manifest_dir));
  }
  r["features"] = p.generic_string();
  r["plain"] = u.plain;
  r["tagged"] = u.tagged;
  r["split"] = split_name(u.split);
  r["source"] = u.source;
  return r;
}

void write_manifest(const fs::path& path, const std::vector<Utterance>& utterances) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::vector<json> records;
  records.reserve(utterances.size());
  for (const auto& u : utterances) records.push_back(utterance_record(u, dir));
  io::write_jsonl(path, records);
}

std::vector<Utterance> read_manifest(const fs::path& path, bool load_features) {
  const fs::path dir =
      fs::absolute(path).has_parent_path() ? fs::absolute(path).parent_path() : fs::path(".");
  std::vector<Utterance> out;
  std::set<std::string> ids;
  for (const json& r : io::read_jsonl(path)) {
    Utterance u;
    try {
      u.id = r.at("id").get<std::string>();
      fs::path fp = r.at("features").get<std::string>();
      u.features_path = fp.is_absolute() ? fp : (dir / fp).lexically_normal();
      u.plain = r.at("plain").get<std::string>();
      u.tagged = r.at("tagged").get<std::string>();
      u.split = split_from_name(r.at("split").get<std::string>());
      u.source = r.value("source", std::string("gold"));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": bad record: " + e.what());
    }
    if (!ids.insert(u.id).second) {
      throw DataError(path.string() + ": duplicate utterance id '" + u.id + "'");
    }
    if (load_features) {
      try {
        u.features = read_features(u.features_path);
      } catch (const DataError& e) {
        throw DataError("utterance '" + u.id + "': " + e.what());
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

fs::path save_corpus(const fs::path& dir, std::vector<Utterance>& utterances) {
  fs::create_directories(dir / "feats");
  for (auto& u : utterances) {
    u.features_path = fs::absolute(dir / "feats" / (u.id + ".ncf"));
    write_features(u.features_path, u.features);
  }
  const fs::path manifest = dir / "manifest.jsonl";
  write_manifest(manifest, utterances);
  return manifest;
}

std::vector<Utterance> select_split(const std::vector<Utterance>& all, Split split) {
  std::vector<Utterance> out;
  for (const auto& u : all) {
    if (u.split == split) out.push_back(u);
  }
  return out;
}

}  // namespace nerctc
