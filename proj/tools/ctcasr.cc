// tools/ctcasr.cc

// Copyright 2026  The ctcasr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synthetic data, training, decoding, iterated CTC,
// scoring and ablation sweeps.  Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctcasr/pipeline.hpp"
#include "ctcasr/synth.hpp"

namespace {

using namespace ctcasr;

struct CommonArgs {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::string preset;
  std::string run_dir;
  std::string train, dev, test, in_domain;
  bool normalize_transitions = false;
};

void AddCommon(CLI::App *app, CommonArgs &a) {
  app->add_option("-c,--config", a.configs, "JSON configuration file (repeatable, later wins)")
      ->check(CLI::ExistingFile);
  app->add_option("-s,--set", a.sets, "Override one key, e.g. --set trainer.learning_rate=0.25");
  app->add_option("--preset", a.preset, "Named preset applied before --set (fisher)");
  app->add_option("--run-dir", a.run_dir, "Run directory (paths.run_dir)");
  app->add_option("--train", a.train, "Training manifest (paths.train)");
  app->add_option("--dev", a.dev, "Development manifest (paths.dev)");
  app->add_option("--test", a.test, "Test manifest (paths.test)");
  app->add_option("--in-domain", a.in_domain, "In-domain polishing manifest (paths.in_domain)");
  app->add_flag("--normalize-transitions", a.normalize_transitions,
                "Renormalize each lattice state's outgoing mass to 1");
}

ExperimentConfig BuildConfig(const CommonArgs &a) {
  ExperimentConfig cfg;
  for (const auto &f : a.configs) cfg.MergeFile(f);
  if (!a.preset.empty()) cfg.ApplyPreset(a.preset);
  for (const auto &s : a.sets) cfg.Set(s);
  if (!a.run_dir.empty()) cfg.tree["paths"]["run_dir"] = a.run_dir;
  const std::pair<const char *, const std::string *> paths[] = {
      {"train", &a.train}, {"dev", &a.dev}, {"test", &a.test}, {"in_domain", &a.in_domain}};
  for (const auto &[key, value] : paths) {
    if (!value->empty()) cfg.tree["paths"][key] = *value;
  }
  if (a.normalize_transitions) cfg.tree["lattice"]["normalize"] = true;
  return cfg;
}

template <typename Fn>
void Dispatch(const ExperimentConfig &cfg, Fn &&fn) {
  if (cfg.use_double()) {
    fn(double{});
  } else {
    fn(float{});
  }
}

std::string OrDefault(const std::string &v, const std::string &fallback) { return v.empty() ? fallback : v; }

void InspectCheckpoint(const std::string &path, bool as_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(StrCat("cannot read ", path));
  const CheckpointHeader h = ReadCheckpointHeader(is);
  const NetConfig &c = h.config;
  Json j;
  j["path"] = path;
  j["precision"] = h.scalar_bytes == 4 ? "float" : "double";
  j["input_dim"] = c.input_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["num_layers"] = c.num_layers;
  j["output_dim"] = c.output_dim;
  j["bidirectional"] = c.bidirectional;
  Json layers = Json::array();
  const std::size_t dirs = c.bidirectional ? 2 : 1;
  for (int l = 0; l < c.num_layers; ++l) {
    const auto in = static_cast<std::size_t>(c.layer_input_dim(l));
    const auto hd = static_cast<std::size_t>(c.hidden_dim);
    layers.push_back({{"layer", l}, {"input_dim", in}, {"parameters", dirs * (hd * in + hd * hd + hd)}});
  }
  j["layers"] = layers;
  j["output_layer_parameters"] =
      static_cast<std::size_t>(c.output_dim) * (dirs * static_cast<std::size_t>(c.hidden_dim) + 1);
  j["total_parameters"] = h.param_count;
  if (as_json) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << "checkpoint  " << path << '\n'
            << "precision   " << j["precision"].get<std::string>() << '\n'
            << "input       " << c.input_dim << '\n'
            << "hidden      " << c.hidden_dim << " x " << c.num_layers << " layers"
            << (c.bidirectional ? " (bidirectional)" : "") << '\n'
            << "output      " << c.output_dim << '\n';
  for (const auto &l : layers) {
    std::cout << "layer " << l["layer"].get<int>() << "     " << l["parameters"].get<std::size_t>() << '\n';
  }
  std::cout << "output      " << j["output_layer_parameters"].get<std::size_t>() << '\n'
            << "total       " << h.param_count << '\n';
}

int Run(int argc, char **argv) {
  CLI::App app{"ctcasr: character-level CTC speech recognition experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  // synth
  auto *synth = app.add_subcommand("synth", "Write a synthetic word corpus (features, manifests, lexicon)");
  SynthOptions so;
  std::string synth_dir;
  synth->add_option("output_dir", synth_dir, "Output directory")->required();
  synth->add_option("--vocab", so.vocab, "Number of words")->capture_default_str();
  synth->add_option("--train-utts", so.train, "Training utterances")->capture_default_str();
  synth->add_option("--dev-utts", so.dev, "Development utterances")->capture_default_str();
  synth->add_option("--test-utts", so.test, "Test utterances")->capture_default_str();
  synth->add_option("--noise", so.noise, "Gaussian noise standard deviation")->capture_default_str();
  synth->add_option("--dim", so.dim, "Feature dimension")->capture_default_str();
  synth->add_option("--min-words", so.min_words, "Minimum words per utterance")->capture_default_str();
  synth->add_option("--max-words", so.max_words, "Maximum words per utterance")->capture_default_str();
  synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();

  CommonArgs ca;
  auto *train = app.add_subcommand("train", "Build inventory and LM, then train the acoustic net");
  AddCommon(train, ca);

  auto *polish = app.add_subcommand("polish", "Low learning-rate passes over in-domain data");
  AddCommon(polish, ca);
  std::string checkpoint;
  polish->add_option("--checkpoint", checkpoint, "Starting checkpoint (default run_dir/best.ckpt)");

  auto *decode = app.add_subcommand("decode", "Decode a manifest (greedy or beam, per decode.method)");
  AddCommon(decode, ca);
  DecodeRequest dr;
  decode->add_option("--checkpoint", dr.checkpoint, "Model checkpoint (default run_dir/best.ckpt)");
  decode->add_option("--manifest", dr.manifest, "Manifest to decode (default paths.test)");
  decode->add_option("-o,--output", dr.output, "Output TSV (default run_dir/decode.tsv)");
  decode->add_option("--nbest-json", dr.nbest_json, "Write n-best lists as JSON");
  decode->add_option("--dump-gamma", dr.gamma_dir, "Write per-utterance state posteriors to this directory");

  auto *ctc2_train = app.add_subcommand("ctc2-train", "Train the second-pass correction net");
  AddCommon(ctc2_train, ca);
  ctc2_train->add_option("--checkpoint", checkpoint, "First-pass checkpoint (default run_dir/best.ckpt)");

  auto *ctc2_apply = app.add_subcommand("ctc2-apply", "Apply the second-pass net to first-pass output");
  AddCommon(ctc2_apply, ca);
  std::string ctc2_checkpoint, manifest;
  ctc2_apply->add_option("--checkpoint", checkpoint, "First-pass checkpoint (default run_dir/best.ckpt)");
  ctc2_apply->add_option("--ctc2-checkpoint", ctc2_checkpoint, "Second-pass checkpoint (default run_dir/ctc2.ckpt)");
  ctc2_apply->add_option("--manifest", manifest, "Manifest (default paths.test)");

  auto *score = app.add_subcommand("score", "Word or character error rate of hypotheses against references");
  std::string ref_path, hyp_path, mode = "word", score_json;
  bool score_as_json = false;
  score->add_option("reference", ref_path, "Reference manifest or TSV")->required()->check(CLI::ExistingFile);
  score->add_option("hypothesis", hyp_path, "Hypothesis TSV")->required()->check(CLI::ExistingFile);
  score->add_option("--mode", mode, "word or char")->check(CLI::IsMember({"word", "char"}))->capture_default_str();
  score->add_flag("--json", score_as_json, "Print the full JSON report");
  score->add_option("--json-out", score_json, "Also write the JSON report to this file");

  auto *sweep = app.add_subcommand("sweep", "Tune the beam on dev and report post-processing and inventory ablations");
  AddCommon(sweep, ca);

  auto *inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint's shape and parameter count");
  std::string inspect_path;
  bool inspect_json = false;
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();
  inspect->add_flag("--json", inspect_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    const int n = WriteSynthCorpus(synth_dir, so);
    std::cout << "wrote " << n << " utterances to " << synth_dir << '\n';
    return 0;
  }
  if (score->parsed()) {
    const ScoreReport r = RunScore(ref_path, hyp_path, ParseTokenMode(mode));
    if (score_as_json) {
      std::cout << r.ToJson().dump(2) << '\n';
    } else {
      r.PrintTable(std::cout);
    }
    if (!score_json.empty()) std::ofstream(score_json) << r.ToJson().dump(2) << '\n';
    return 0;
  }
  if (inspect->parsed()) {
    InspectCheckpoint(inspect_path, inspect_json);
    return 0;
  }

  const ExperimentConfig cfg = BuildConfig(ca);
  const std::string best = RunFile(cfg, "best.ckpt");
  if (train->parsed()) {
    Dispatch(cfg, [&](auto r) { RunTrain<decltype(r)>(cfg, std::cerr); });
  } else if (polish->parsed()) {
    Dispatch(cfg, [&](auto r) { RunPolish<decltype(r)>(cfg, OrDefault(checkpoint, best), std::cerr); });
  } else if (decode->parsed()) {
    dr.checkpoint = OrDefault(dr.checkpoint, best);
    if (dr.manifest.empty()) dr.manifest = RequirePath(cfg, "test");
    dr.output = OrDefault(dr.output, RunFile(cfg, "decode.tsv"));
    Dispatch(cfg, [&](auto r) { RunDecode<decltype(r)>(cfg, dr, std::cerr); });
  } else if (ctc2_train->parsed()) {
    Dispatch(cfg, [&](auto r) { RunCtc2Train<decltype(r)>(cfg, OrDefault(checkpoint, best), std::cerr); });
  } else if (ctc2_apply->parsed()) {
    if (manifest.empty()) manifest = RequirePath(cfg, "test");
    Dispatch(cfg, [&](auto r) {
      RunCtc2Apply<decltype(r)>(cfg, OrDefault(checkpoint, best), OrDefault(ctc2_checkpoint, RunFile(cfg, "ctc2.ckpt")),
                                manifest, std::cerr);
    });
  } else if (sweep->parsed()) {
    Dispatch(cfg, [&](auto r) { PrintSweepTables(RunSweep<decltype(r)>(cfg, std::cerr), std::cout); });
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return Run(argc, argv);
  } catch (const ctcasr::Error &e) {
    std::cerr << "ctcasr: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "ctcasr: configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "ctcasr: " << e.what() << '\n';
    return 2;
  }
}
