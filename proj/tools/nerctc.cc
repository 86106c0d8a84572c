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

// nerctc: corpus generation, training, decoding and scoring from the shell.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nerctc/augment.h"
#include "nerctc/config.h"
#include "nerctc/corpus.h"
#include "nerctc/error.h"
#include "nerctc/io.h"
#include "nerctc/log.h"
#include "nerctc/parallel.h"
#include "nerctc/workflow.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nerctc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Globals {
  int threads = default_threads();
};

std::vector<Utterance> load_split(const fs::path& manifest, const std::string& split,
                                  bool load_features = true) {
  std::vector<Utterance> all = read_manifest(manifest, load_features);
  if (split == "all") return all;
  return select_split(all, split_from_name(split));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  io::write_atomic(path, [&](std::ostream& out) {
    for (const auto& l : lines) out << l << "\n";
  });
}

// Hypothesis files: decode output ({"id", "nbest": [{"tagged"}]}) or
// flat {"id", "tagged"} records.
std::vector<ScoredUtterance> read_hypotheses(const fs::path& path) {
  std::vector<ScoredUtterance> out;
  for (const json& r : io::read_jsonl(path)) {
    try {
      ScoredUtterance s;
      s.id = r.at("id").get<std::string>();
      if (r.contains("nbest")) {
        const json& nb = r.at("nbest");
        s.tagged = nb.empty() ? std::string() : nb.at(0).at("tagged").get<std::string>();
      } else {
        s.tagged = r.at("tagged").get<std::string>();
      }
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": bad hypothesis record: " + e.what());
    }
  }
  return out;
}

std::optional<NgramLM> maybe_lm(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return NgramLM::load_arpa(path);
}

RuleSet rules_or_default(const std::string& path) {
  return path.empty() ? default_rule_set() : load_rule_set(path);
}

void add_decoder_flags(CLI::App* cmd, DecoderConfig& dc, std::optional<double>& prune) {
  cmd->add_option("--alpha", dc.alpha, "LM weight")->capture_default_str();
  cmd->add_option("--beta", dc.beta, "Word insertion bonus")->capture_default_str();
  cmd->add_option("--beam", dc.beam_width, "Beam width")->capture_default_str();
  cmd->add_option("--nbest", dc.n_best, "Hypotheses kept per utterance")->capture_default_str();
  cmd->add_option("--prune", prune, "Per-frame log-probability pruning threshold");
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Named entity extraction from speech with character CTC models"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);

  // corpus gen
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus tools");
  corpus->require_subcommand(1);
  auto* corpus_gen = corpus->add_subcommand("gen", "Generate a synthetic corpus");
  std::string spec_path, corpus_out;
  std::optional<uint64_t> corpus_seed;
  corpus_gen->add_option("--spec", spec_path, "Corpus spec JSON (default spec if omitted)");
  corpus_gen->add_option("--out", corpus_out, "Output directory")->required();
  corpus_gen->add_option("--seed", corpus_seed, "Master seed (overrides the spec)");

  // lm train
  auto* lm = app.add_subcommand("lm", "Language model tools");
  lm->require_subcommand(1);
  auto* lm_train = lm->add_subcommand("train", "Train a Witten-Bell word n-gram model");
  std::string lm_manifest, lm_out, lm_split = "train";
  int lm_order = 3;
  bool lm_tagged = false, lm_plain = false, lm_starred = false;
  lm_train->add_option("--manifest", lm_manifest, "Corpus manifest")->required();
  lm_train->add_option("--order", lm_order, "n-gram order")->capture_default_str();
  lm_train->add_option("--split", lm_split, "train|dev|test|all")->capture_default_str();
  auto* f_tagged = lm_train->add_flag("--tagged", lm_tagged, "Train on tagged transcripts");
  auto* f_plain = lm_train->add_flag("--plain", lm_plain, "Train on plain transcripts");
  auto* f_starred = lm_train->add_flag("--starred", lm_starred, "Train on starred transcripts");
  f_tagged->excludes(f_plain)->excludes(f_starred);
  f_plain->excludes(f_starred);
  lm_train->add_option("--out", lm_out, "Output ARPA file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train one phase of the two-phase schedule");
  std::string phase = "asr", train_config, train_manifest, train_out, train_from, train_aug,
              train_stats;
  bool starred = false, reinit_output = false;
  std::optional<double> augment_weight;
  std::optional<uint64_t> train_seed;
  train->add_option("--phase", phase, "asr|ner")->check(CLI::IsMember({"asr", "ner"}));
  train->add_flag("--starred", starred, "Star-transform ner targets");
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_option("--manifest", train_manifest, "Corpus manifest (train and dev splits)")
      ->required();
  train->add_option("--augment", train_aug, "Augmented manifest mixed into ner training");
  train->add_option("--augment-weight", augment_weight, "Loss weight of augmented utterances");
  train->add_option("--from", train_from, "asr checkpoint to extend (ner phase)");
  train->add_flag("--reinit-output", reinit_output,
                  "Re-initialize the whole output layer instead of keeping base rows");
  train->add_option("--out", train_out, "Output checkpoint")->required();
  train->add_option("--stats", train_stats, "Per-epoch stats JSONL (default: CKPT.stats.jsonl)");
  train->add_option("--seed", train_seed, "Training seed (overrides the config)");

  // decode
  auto* decode = app.add_subcommand("decode", "Beam-search decoding to n-best JSONL");
  std::string dec_ckpt, dec_manifest, dec_lm, dec_out, dec_split = "test";
  DecoderConfig dc;
  std::optional<double> dec_prune;
  decode->add_option("--ckpt", dec_ckpt, "Checkpoint")->required();
  decode->add_option("--manifest", dec_manifest, "Corpus manifest")->required();
  decode->add_option("--split", dec_split, "train|dev|test|all")->capture_default_str();
  decode->add_option("--lm", dec_lm, "ARPA language model for shallow fusion");
  add_decoder_flags(decode, dc, dec_prune);
  decode->add_flag("--base-only", dc.base_only, "Mask markers and star");
  decode->add_option("--out", dec_out, "Output JSONL")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score hypotheses against a reference manifest");
  std::string ev_ref, ev_hyp, ev_mode = "category", ev_out, ev_split = "all", ev_system = "E2E",
              ev_corpus = "test";
  bool ev_rates = false;
  eval->add_option("--ref", ev_ref, "Reference manifest")->required();
  eval->add_option("--hyp", ev_hyp, "Hypothesis JSONL")->required();
  eval->add_option("--mode", ev_mode, "category|catvalue")
      ->check(CLI::IsMember({"category", "catvalue"}))
      ->capture_default_str();
  eval->add_option("--split", ev_split, "Reference split to score (default: ids in hyp)");
  eval->add_flag("--wer", ev_rates, "Also report WER and CER");
  eval->add_option("--out", ev_out, "Report JSON (default: standard output)");
  eval->add_option("--system", ev_system, "System label for the table")->capture_default_str();
  eval->add_option("--corpus", ev_corpus, "Corpus label for the table")->capture_default_str();

  // augment
  auto* augment = app.add_subcommand("augment", "Tag plain transcripts with text rules");
  std::string aug_manifest, aug_rules, aug_out, aug_split = "all";
  augment->add_option("--manifest", aug_manifest, "Input manifest")->required();
  augment->add_option("--rules", aug_rules, "Rule set JSON (default rules if omitted)");
  augment->add_option("--split", aug_split, "train|dev|test|all")->capture_default_str();
  augment->add_option("--out", aug_out, "Output manifest")->required();

  // rules
  auto* rules_cmd = app.add_subcommand("rules", "Write the default rule set");
  std::string rules_out;
  rules_cmd->add_option("--out", rules_out, "Output JSON")->required();

  // transform
  auto* transform = app.add_subcommand("transform", "Transcript codec, one record per line");
  bool tr_encode = false, tr_star = false, tr_parse = false, tr_repair = false;
  std::string tr_in, tr_out;
  auto* o_enc = transform->add_flag(
      "--encode", tr_encode, "JSONL {words|text, entities:[{category,begin,end}]} to tagged");
  auto* o_star = transform->add_flag("--star", tr_star, "Tagged lines to starred lines");
  auto* o_parse = transform->add_flag("--parse", tr_parse, "Tagged lines to JSONL entities");
  o_enc->excludes(o_star)->excludes(o_parse);
  o_star->excludes(o_parse);
  transform->add_flag("--repair", tr_repair, "Parse with the repair policy");
  transform->add_option("--in", tr_in, "Input file")->required();
  transform->add_option("--out", tr_out, "Output file")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "ASR decoding followed by text tagging");
  std::string pl_ckpt, pl_manifest, pl_rules, pl_lm, pl_out, pl_split = "test";
  DecoderConfig pdc;
  std::optional<double> pl_prune;
  pipeline->add_option("--ckpt", pl_ckpt, "Checkpoint")->required();
  pipeline->add_option("--manifest", pl_manifest, "Corpus manifest")->required();
  pipeline->add_option("--rules", pl_rules, "Rule set JSON (default rules if omitted)");
  pipeline->add_option("--split", pl_split, "train|dev|test|all")->capture_default_str();
  pipeline->add_option("--lm", pl_lm, "Plain-text ARPA language model");
  add_decoder_flags(pipeline, pdc, pl_prune);
  pipeline->add_option("--out", pl_out, "Output JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (corpus_gen->parsed()) {
      CorpusSpec spec = spec_path.empty() ? default_corpus_spec()
                                          : corpus_spec_from_json(io::read_json_file(spec_path));
      if (corpus_seed) spec.seed = *corpus_seed;
      GeneratedCorpus generated = generate_corpus(spec);
      const fs::path manifest = save_corpus(corpus_out, generated.utterances);
      io::write_json_file(fs::path(corpus_out) / "corpus_spec.json", corpus_spec_to_json(spec));
      spdlog::get("nerctc")->info("wrote {} utterances to {}", generated.utterances.size(),
                                  manifest.string());
    } else if (lm_train->parsed()) {
      if (!lm_tagged && !lm_plain && !lm_starred) {
        std::cerr << "lm train: one of --tagged, --plain, --starred is required\n";
        return kExitUsage;
      }
      const LmText mode = lm_tagged ? LmText::kTagged : lm_starred ? LmText::kStarred : LmText::kPlain;
      const auto utts = load_split(lm_manifest, lm_split, false);
      if (utts.empty()) throw DataError(lm_manifest + ": no utterances in split " + lm_split);
      train_lm(utts, mode, lm_order).save_arpa(lm_out);
    } else if (train->parsed()) {
      if (phase == "asr" && (!train_from.empty() || !train_aug.empty() || starred)) {
        std::cerr << "train: --from, --augment and --starred apply to --phase ner only\n";
        return kExitUsage;
      }
      if (phase == "ner" && train_from.empty()) {
        std::cerr << "train: --phase ner requires --from CKPT\n";
        return kExitUsage;
      }
      RunConfig cfg = load_run_config(train_config);
      if (train_seed) {
        cfg.net.seed = *train_seed;
        cfg.ner_net.seed = *train_seed;
      }
      if (augment_weight) cfg.augment_weight = *augment_weight;
      const auto all = read_manifest(train_manifest);
      const auto train_utts = select_split(all, Split::kTrain);
      const auto dev_utts = select_split(all, Split::kDev);
      if (train_utts.empty()) throw DataError(train_manifest + ": no train utterances");
      Checkpoint ckpt;
      std::vector<EpochStats> history;
      if (phase == "asr") {
        ckpt = train_asr_phase(cfg, train_utts, dev_utts, g.threads, &history);
      } else {
        const Checkpoint asr = load_checkpoint(train_from);
        std::vector<Utterance> aug;
        if (!train_aug.empty()) aug = load_split(train_aug, "train");
        ckpt = train_ner_phase(cfg, asr, starred, train_utts, train_aug.empty() ? nullptr : &aug,
                               dev_utts, g.threads, &history, !reinit_output);
      }
      save_checkpoint(train_out, ckpt);
      json resolved = run_config_to_json(cfg);
      resolved["phase"] = phase;
      resolved["starred"] = starred;
      resolved["manifest"] = train_manifest;
      if (!train_from.empty()) resolved["from"] = train_from;
      if (!train_aug.empty()) resolved["augment"] = train_aug;
      io::write_json_file(train_out + ".config.json", resolved);
      std::vector<json> records;
      for (const auto& s : history) {
        for (auto& r : epoch_records(s)) records.push_back(std::move(r));
      }
      io::write_jsonl(train_stats.empty() ? train_out + ".stats.jsonl" : train_stats, records);
    } else if (decode->parsed()) {
      dc.prune_threshold = dec_prune;
      const Checkpoint ckpt = load_checkpoint(dec_ckpt);
      const auto utts = load_split(dec_manifest, dec_split);
      const std::optional<NgramLM> model = maybe_lm(dec_lm);
      const auto nbest = decode_corpus(ckpt, utts, model ? &*model : nullptr, dc, g.threads);
      std::vector<json> records;
      for (size_t k = 0; k < utts.size(); ++k) records.push_back(decode_record(utts[k].id, nbest[k]));
      io::write_jsonl(dec_out, records);
    } else if (eval->parsed()) {
      const auto hyps = read_hypotheses(ev_hyp);
      std::vector<Utterance> refs = load_split(ev_ref, ev_split, false);
      if (ev_split == "all" && refs.size() != hyps.size()) {
        // Score the reference records the hypotheses cover.
        std::set<std::string> ids;
        for (const auto& h : hyps) ids.insert(h.id);
        std::vector<Utterance> kept;
        for (auto& r : refs) {
          if (ids.count(r.id)) kept.push_back(std::move(r));
        }
        refs = std::move(kept);
      }
      const EvalReport report = score(scored(refs), hyps, ev_rates, g.threads);
      const ScoreMode mode = score_mode_from_name(ev_mode);
      const json doc = report_to_json(report, mode);
      if (ev_out.empty()) {
        std::cout << doc.dump(2) << "\n";
      } else {
        io::write_json_file(ev_out, doc);
        std::cout << format_table({{ev_system, ev_corpus, report.mode(mode)}});
      }
    } else if (augment->parsed()) {
      const RuleSet rules = rules_or_default(aug_rules);
      const auto utts = load_split(aug_manifest, aug_split, false);
      write_manifest(aug_out, augment_corpus(utts, rules, g.threads));
    } else if (rules_cmd->parsed()) {
      io::write_json_file(rules_out, rule_set_to_json(default_rule_set()));
    } else if (transform->parsed()) {
      if (!tr_encode && !tr_star && !tr_parse) {
        std::cerr << "transform: one of --encode, --star, --parse is required\n";
        return kExitUsage;
      }
      std::vector<std::string> out;
      if (tr_encode) {
        for (const json& r : io::read_jsonl(tr_in)) {
          try {
            std::vector<std::string> words = r.contains("words")
                                                 ? r.at("words").get<std::vector<std::string>>()
                                                 : tokenize(r.at("text").get<std::string>());
            std::vector<Entity> entities;
            for (const json& e : r.value("entities", json::array())) {
              Entity ent;
              const auto cat = category_from_name(e.at("category").get<std::string>());
              if (!cat) throw DataError("unknown category " + e.at("category").dump());
              ent.category = *cat;
              ent.begin = e.at("begin").get<size_t>();
              ent.end = e.at("end").get<size_t>();
              ent.value = e.value("value", std::string());
              entities.push_back(ent);
            }
            out.push_back(encode(words, entities).str());
          } catch (const json::exception& e) {
            throw DataError(tr_in + ": bad record: " + e.what());
          } catch (const std::invalid_argument& e) {
            throw DataError(tr_in + ": " + e.what());
          }
        }
        write_lines(tr_out, out);
      } else {
        const auto lines = read_lines(tr_in);
        std::vector<json> records;
        for (size_t n = 0; n < lines.size(); ++n) {
          try {
            if (tr_star) {
              if (tr_repair) {
                const ParsedTranscript p = parse(lines[n], ParsePolicy::kRepair);
                out.push_back(star_transform(encode(p.words, p.entities)).str());
              } else {
                out.push_back(star_transform(lines[n]));
              }
            } else {
              const ParsedTranscript p =
                  parse(lines[n], tr_repair ? ParsePolicy::kRepair : ParsePolicy::kStrict);
              json ents = json::array();
              for (const auto& e : p.entities) {
                ents.push_back({{"category", category_name(e.category)},
                                {"value", e.value},
                                {"begin", e.begin},
                                {"end", e.end}});
              }
              records.push_back({{"words", p.words}, {"entities", ents}});
            }
          } catch (const DataError& e) {
            throw DataError(tr_in + ":" + std::to_string(n + 1) + ": " + e.what());
          }
        }
        if (tr_star) write_lines(tr_out, out);
        else io::write_jsonl(tr_out, records);
      }
    } else if (pipeline->parsed()) {
      pdc.prune_threshold = pl_prune;
      const Checkpoint ckpt = load_checkpoint(pl_ckpt);
      const auto utts = load_split(pl_manifest, pl_split);
      const RuleSet rules = rules_or_default(pl_rules);
      const std::optional<NgramLM> model = maybe_lm(pl_lm);
      const auto tagged =
          pipeline_decode(ckpt, utts, model ? &*model : nullptr, pdc, rules, g.threads);
      std::vector<json> records;
      for (size_t k = 0; k < utts.size(); ++k) {
        records.push_back({{"id", utts[k].id}, {"tagged", tagged[k]}});
      }
      io::write_jsonl(pl_out, records);
    }
  } catch (const DataError& e) {
    spdlog::get("nerctc")->error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::get("nerctc")->error("{}", e.what());
    return kExitData;
  }
  return 0;
}
