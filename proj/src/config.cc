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

#include "nerctc/config.h"

#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/io.h"

namespace nerctc {

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& why) {
  throw DataError("config field '" + field + "': " + why);
}

}  // namespace

nlohmann::json decoder_config_to_json(const DecoderConfig& c) {
  nlohmann::json j = {{"alpha", c.alpha},     {"beta", c.beta},
                      {"beam_width", c.beam_width}, {"n_best", c.n_best},
                      {"base_only", c.base_only}};
  j["prune_threshold"] = c.prune_threshold ? nlohmann::json(*c.prune_threshold) : nlohmann::json();
  return j;
}

DecoderConfig decoder_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("decoder config must be a JSON object");
  DecoderConfig c;
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "beam_width") c.beam_width = v.get<int>();
      else if (key == "n_best") c.n_best = v.get<int>();
      else if (key == "base_only") c.base_only = v.get<bool>();
      else if (key == "prune_threshold") {
        if (v.is_null()) c.prune_threshold.reset();
        else c.prune_threshold = v.get<double>();
      } else {
        throw DataError("unknown field");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("decoder config field '" + key + "': " + e.what());
    } catch (const DataError& e) {
      throw DataError("decoder config field '" + key + "': " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("decoder config: ") + e.what());
  }
  return c;
}

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw DataError("config must be a JSON object");
  RunConfig r;
  nlohmann::json net_doc = nlohmann::json::object();
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "seed") {
        r.seed = v.get<uint64_t>();
      } else if (key == "out_dir") {
        r.out_dir = base_dir / v.get<std::string>();
      } else if (key == "corpus") {
        r.corpus = corpus_spec_from_json(v);
        r.corpus.validate();
      } else if (key == "net") {
        net_doc = v;
        r.net = net_config_from_json(v);
      } else if (key == "ner") {
        if (!v.is_object()) field_error(key, "must be an object");
        r.ner_overrides = v;
      } else if (key == "decoder") {
        r.decoder = decoder_config_from_json(v);
      } else if (key == "rules") {
        if (!v.is_null()) r.rules = base_dir / v.get<std::string>();
      } else if (key == "lm_order") {
        r.lm_order = v.get<int>();
        if (r.lm_order < 1) field_error(key, "must be >= 1");
      } else if (key == "augment_weight") {
        r.augment_weight = v.get<double>();
        if (!(r.augment_weight >= 0.0)) field_error(key, "must be >= 0");
      } else {
        field_error(key, "unknown field");
      }
    } catch (const nlohmann::json::exception& e) {
      field_error(key, e.what());
    } catch (const DataError& e) {
      const std::string what = e.what();
      if (what.rfind("config field", 0) == 0) throw;
      field_error(key, what);
    }
  }
  if (!net_doc.contains("seed")) r.net.seed = r.seed;
  if (!doc.contains("corpus") || !doc.at("corpus").contains("seed")) r.corpus.seed = r.seed;

  nlohmann::json ner_doc = net_config_to_json(r.net);
  for (const auto& [key, v] : r.ner_overrides.items()) ner_doc[key] = v;
  try {
    r.ner_net = net_config_from_json(ner_doc);
  } catch (const DataError& e) {
    field_error("ner", e.what());
  }
  // output_size is fixed by the phase alphabet; validate the rest now.
  for (const auto& [name, cfg] : {std::pair{"net", r.net}, std::pair{"ner", r.ner_net}}) {
    NetConfig probe = cfg;
    probe.output_size = std::max(probe.output_size, 2);
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      field_error(name, e.what());
    }
    if (cfg.feature_dim != r.corpus.feature_dim) {
      field_error(std::string(name) + ".feature_dim", "does not match corpus.feature_dim");
    }
  }
  return r;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(io::read_json_file(path), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

nlohmann::json run_config_to_json(const RunConfig& r) {
  nlohmann::json j = {
      {"seed", r.seed},
      {"out_dir", r.out_dir.string()},
      {"corpus", corpus_spec_to_json(r.corpus)},
      {"net", net_config_to_json(r.net)},
      {"ner", r.ner_overrides},
      {"decoder", decoder_config_to_json(r.decoder)},
      {"lm_order", r.lm_order},
      {"augment_weight", r.augment_weight},
  };
  j["rules"] = r.rules ? nlohmann::json(r.rules->string()) : nlohmann::json();
  return j;
}

}  // namespace nerctc
